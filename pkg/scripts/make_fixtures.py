"""Generate the committed test fixtures: cover/secret PNGs, a trained toy
checkpoint and the golden recovered image.

The golden image is produced through the exact file path the CLI test
replays (hide -> 16-bit stego PNG -> reveal), so the committed artifact
differs from a fresh run only by float rounding.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

import os
import sys
import warnings

sys.path.insert(0, "src")
sys.path.insert(0, "tests")

import numpy as np

from ardis import autodiff as ad
from ardis import checkpoint as ck
from ardis import imaging, metrics
from ardis import pipeline as pl
from conftest import toy_config
from helpers import synth_image

DATA = os.path.join(os.path.dirname(__file__), "..", "tests", "data")


def main():
    os.makedirs(DATA, exist_ok=True)
    cfg = toy_config()
    rng = np.random.default_rng(42)
    images = [synth_image(rng, 64, 64) for _ in range(8)]

    print("training toy model (500 steps)...", flush=True)
    model = pl.ArdisModel(cfg)
    state = ad.AdamState(model.params())
    model, state, rows = pl.train(cfg, images, resume=(model, state))
    print(f"final loss {rows[-1]['total']:.5f}  rre {rows[-1]['rre']:.1f}%")

    ckpt_path = os.path.join(DATA, "toy_model.ards")
    ck.save_checkpoint(model, ckpt_path)
    print(f"checkpoint: {ckpt_path} ({os.path.getsize(ckpt_path)} bytes)")

    cover_path = os.path.join(DATA, "cover.png")
    secret_path = os.path.join(DATA, "secret.png")
    imaging.save_image(cover_path, images[0])
    fix_rng = np.random.default_rng(7)
    imaging.save_image(secret_path, imaging.resample(synth_image(fix_rng, 64, 64), (96, 80)))

    # golden chain exactly as the CLI test replays it
    import tempfile

    cover = imaging.load_image(cover_path)
    secret = imaging.load_image(secret_path)
    stego, _ = pl.hide(model, cover, secret)
    stego_path = os.path.join(tempfile.mkdtemp(), "stego16.png")
    imaging.save_image(stego_path, stego, bits16=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = pl.reveal(model, imaging.load_image(stego_path))
    print(f"decoded {result.size} margin {result.margin:.4f}")
    assert result.size == (96, 80), "golden model failed to decode the fixture resolution"
    # 8-bit, matching the reveal subcommand's output format, so the CLI
    # test compares like-for-like quantizations
    golden_path = os.path.join(DATA, "golden_recovered.png")
    imaging.save_image(golden_path, result.secret)
    print(f"golden recovered: {golden_path}")
    print(f"stego psnr {metrics.psnr(stego, cover):.2f}  "
          f"secret psnr {metrics.psnr(result.secret, secret):.2f}")


if __name__ == "__main__":
    main()
