"""Command-line interface: hide, reveal, train, eval, selftest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
The reveal subcommand deliberately has no resolution option; recovery is
blind by construction.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import imaging, irc, lgir, metrics, pipeline, wavelet
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ArdisConfig, ConfigError
from .imaging import ImageError
from .pipeline import ArdisModel, PipelineError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = CliParser(prog="ardis", description="Arbitrary-resolution image steganography.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=CliParser)

    h = sub.add_parser("hide", help="embed a secret image into a cover")
    h.add_argument("--cover", required=True)
    h.add_argument("--secret", required=True)
    h.add_argument("--model", required=True, help="checkpoint file")
    h.add_argument("--out", required=True, help="output stego PNG")
    h.add_argument("--bits16", action="store_true", help="write a 16-bit PNG")
    h.set_defaults(func=cmd_hide)

    r = sub.add_parser("reveal", help="blindly recover the secret from a stego image")
    r.add_argument("--stego", required=True)
    r.add_argument("--model", required=True)
    r.add_argument("--out", required=True, help="output secret PNG at the decoded resolution")
    r.add_argument("--report", help="optional CSV metric report")
    r.set_defaults(func=cmd_reveal)

    t = sub.add_parser("train", help="train a model on a directory of PNGs")
    t.add_argument("--config", required=True, help="key = value config file")
    t.add_argument("--data", required=True, help="directory of training PNGs")
    t.add_argument("--out", required=True, help="output checkpoint path")
    t.add_argument("--log", help="CSV training log path")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="hide+reveal paired directories and report metrics")
    e.add_argument("--model", required=True)
    e.add_argument("--covers", required=True)
    e.add_argument("--secrets", required=True)
    e.add_argument("--report", required=True, help="output CSV path")
    e.add_argument("--bits16", action="store_true",
                   help="carry stegos through a 16-bit save/load instead of staying in memory")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("selftest", help="run the no-training property suite")
    s.set_defaults(func=cmd_selftest)
    return p


def cmd_hide(args):
    model, _ = load_checkpoint(args.model)
    cover = imaging.load_image(args.cover, expand_gray=True)
    secret = imaging.load_image(args.secret, expand_gray=True)
    stego, _ = pipeline.hide(model, cover, secret)
    imaging.save_image(args.out, stego, bits16=args.bits16)
    print(f"stego written to {args.out} ({'16' if args.bits16 else '8'}-bit)")
    print(f"stego psnr {metrics.psnr(stego, cover):.2f} dB  ssim {metrics.ssim(stego, cover):.4f}")
    return EXIT_OK


def cmd_reveal(args):
    model, _ = load_checkpoint(args.model)
    stego = imaging.load_image(args.stego, expand_gray=True)
    result = pipeline.reveal(model, stego)
    imaging.save_image(args.out, result.secret)
    print(f"decoded resolution {result.size[0]}x{result.size[1]}  decode margin {result.margin:.4f}")
    if result.warning:
        print(f"warning: {result.warning}")
    print(f"recovered secret written to {args.out}")
    if args.report:
        # quality columns need ground truth the receiver does not have
        nan = float("nan")
        row = metrics.MetricRow(id=os.path.basename(args.stego), stego_psnr=nan,
                                stego_ssim=nan, secret_psnr=nan, secret_ssim=nan,
                                rre_percent=nan)
        metrics.write_report(args.report, [row], include_aggregate=False)
    return EXIT_OK


def cmd_train(args):
    with open(args.config) as fh:
        config = ArdisConfig.from_text(fh.read())
    config.validate()
    resume = None
    if args.resume:
        model, state = load_checkpoint(args.resume, expect_config=config)
        if state is None:
            raise CheckpointError(f"{args.resume}: no optimizer state, cannot resume")
        resume = (model, state)
    _, state, rows = pipeline.train(config, args.data, out_path=args.out,
                                    log_path=args.log, resume=resume, seed=args.seed)
    last = rows[-1] if rows else {}
    print(f"trained to step {state.step_count}; checkpoint written to {args.out}")
    if last:
        print(f"final loss {last['total']:.6f}  stego psnr {last['stego_psnr']:.2f} dB  rre {last['rre']:.2f}%")
    return EXIT_OK


def _paired_pngs(cover_dir, secret_dir):
    covers = {f for f in os.listdir(cover_dir) if f.lower().endswith(".png")}
    secrets = {f for f in os.listdir(secret_dir) if f.lower().endswith(".png")}
    if not covers or not secrets:
        raise PipelineError(f"empty directory: {cover_dir if not covers else secret_dir}")
    unpaired = covers ^ secrets
    if unpaired:
        raise PipelineError(f"unpaired files between {cover_dir} and {secret_dir}: {sorted(unpaired)}")
    return sorted(covers)


def cmd_eval(args):
    import tempfile
    import warnings

    model, _ = load_checkpoint(args.model)
    names = _paired_pngs(args.covers, args.secrets)
    rows = []
    for name in names:
        cover = imaging.load_image(os.path.join(args.covers, name), expand_gray=True)
        secret = imaging.load_image(os.path.join(args.secrets, name), expand_gray=True)
        stego, _ = pipeline.hide(model, cover, secret)
        if args.bits16:
            # metrics after save/load quantization
            with tempfile.TemporaryDirectory() as tmp:
                spath = os.path.join(tmp, "stego.png")
                imaging.save_image(spath, stego, bits16=True)
                stego = imaging.load_image(spath)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = pipeline.reveal(model, stego)
        recovered = result.secret
        if recovered.shape[:2] != secret.shape[:2]:
            # wrong decoded dims: score quality at truth dims, RRE keeps the miss
            recovered = imaging.resample(recovered, secret.shape[:2])
        rows.append(metrics.MetricRow(
            id=name,
            stego_psnr=metrics.psnr(stego, cover),
            stego_ssim=metrics.ssim(stego, cover),
            secret_psnr=metrics.psnr(recovered, secret),
            secret_ssim=metrics.ssim(recovered, secret),
            rre_percent=metrics.rre(result.size, secret.shape[:2])))
    metrics.write_report(args.report, rows)
    agg = metrics.aggregate(rows)
    print(f"evaluated {len(rows)} pairs ({'16-bit file path' if args.bits16 else 'in-memory path'})")
    print(f"mean stego psnr {agg.stego_psnr:.2f} dB  secret psnr {agg.secret_psnr:.2f} dB  "
          f"rre {agg.rre_percent:.2f}%")
    print(f"report written to {args.report}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks():
    from . import autodiff as ad
    from . import fda
    from .ihn import InvertibleHidingNetwork

    rng = np.random.default_rng(2024)

    def check_wavelet():
        x = rng.standard_normal((32, 24, 3))
        f = wavelet.dwt2(x)
        assert np.abs(wavelet.iwt2(f) - x).max() < 1e-10
        assert np.abs(wavelet.dwt2(wavelet.iwt2(f)) - f).max() < 1e-10
        assert abs((f ** 2).sum() - (x ** 2).sum()) < 1e-9

    def check_ihn():
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=4, width=8)
        for name, p in net.named_params():
            if "clamp" not in name:
                p.data = rng.standard_normal(p.data.shape) * 0.5 * math.sqrt(
                    2.0 / max(1, int(np.prod(p.data.shape[:3]))))
        x1 = ad.Tensor(rng.standard_normal((8, 8, 4)))
        x2 = ad.Tensor(rng.standard_normal((8, 8, 9)))
        with ad.no_grad():
            y1, y2 = net.hide(x1, x2)
            r1, r2 = net.reveal(y1, y2)
        err = max(np.abs(r1.data - x1.data).max(), np.abs(r2.data - x2.data).max())
        assert err < 1e-10, err

    def check_fda():
        secret = rng.random((50, 70, 3))
        x_g, r = fda.decompose(secret, (16, 16))
        recon = imaging.resample(x_g, (50, 70)) + r
        assert np.abs(recon - secret).max() < 1e-12

    def check_lgir_weights():
        xq = rng.uniform(-1, 1, (2000, 2))
        _, _, w = lgir.ensemble_weights(xq, (16, 16))
        assert np.abs(w.sum(axis=1) - 1.0).max() < 1e-12
        assert w.min() >= 0.0 and w.max() <= 1.0

    def check_irc():
        for h, w in [(1, 1), (225, 3452), (720, 1024), (65535, 65535)]:
            m = irc.encode_map(irc.quantize_resolution(h, w, 32), (64, 64))
            assert irc.decode_map(m, 32) == (h, w)
        noise_rng = np.random.default_rng(5)
        for _ in range(200):
            h, w = noise_rng.integers(1, 65536, 2)
            m = irc.encode_map(irc.quantize_resolution(h, w, 32), (64, 128))
            noisy = m + noise_rng.uniform(-0.9, 0.9, m.shape)
            assert irc.decode_map(noisy, 32) == (h, w)

    def check_metrics():
        x = rng.random((32, 32, 3))
        assert metrics.psnr(x, x) == 100.0
        assert abs(metrics.ssim(x, x) - 1.0) < 1e-12
        assert metrics.rre((256, 256), (256, 256)) == 0.0
        assert abs(metrics.rre((256, 256), (512, 512)) - 50.0) < 1e-12

    return [
        ("wavelet round trip + energy", check_wavelet),
        ("ihn invertibility (random weights)", check_ihn),
        ("fda reconstruction identity", check_fda),
        ("lgir ensemble weight normalization", check_lgir_weights),
        ("irc round trip + noise voting", check_irc),
        ("metric sanity", check_metrics),
    ]


def cmd_selftest(args):
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
            print(f"PASS  {name}")
        except Exception as exc:  # report every property, then fail once
            failures += 1
            print(f"FAIL  {name}: {exc}")
    if failures:
        print(f"selftest: {failures} properties failed")
        return EXIT_DATA
    print("selftest: all properties passed")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FloatingPointError as exc:
        print(f"ardis: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ImageError, CheckpointError, ConfigError, PipelineError, ValueError, OSError) as exc:
        print(f"ardis: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
