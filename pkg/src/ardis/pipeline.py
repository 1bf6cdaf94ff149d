"""End-to-end hide/reveal orchestration, the training loss, and training.

Hiding: the secret is decoupled into a cover-aligned basis and a detail
latent, its resolution is broadcast into a stripe map, everything is
moved to the wavelet domain and pushed through the invertible hiding
network alongside the cover; the inverse wavelet transform of the cover
branch is the stego image.

Revealing is blind: from the stego image alone, the inverse network
reconstructs the payload branch, the stripe map is vote-decoded into the
original resolution, and the implicit reconstructor renders the secret
at exactly those dims.  No code path accepts resolution metadata.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import fda, imaging, irc, lgir, metrics, wavelet
from .config import ArdisConfig
from .ihn import InvertibleHidingNetwork, sample_aux
from .validation import check_cover, check_image, check_secret

DEFAULT_MARGIN_THRESHOLD = 0.2


class PipelineError(RuntimeError):
    pass


class ArdisModel:
    """All learnable components, built deterministically from a config."""

    def __init__(self, config: ArdisConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.ihn = InvertibleHidingNetwork(
            rng, config.cover_channels(), config.payload_channels(),
            config.ihn_blocks, config.ihn_width, config.clamp_init, config.padding)
        self.detail_encoder = fda.DetailEncoder(rng, config.c_lat, config.fda_width, config.padding)
        self.enc_g = lgir.FeatureEncoder(rng, 3, config.d_g, config.padding)
        self.enc_d = lgir.FeatureEncoder(rng, config.c_lat, config.d_d, config.padding)
        unfold = 9 if config.feat_unfold else 1
        self.decoder = lgir.ImplicitDecoder(
            rng, (config.d_g + config.d_d) * unfold + 4, config.mlp_width, config.mlp_depth)

    def named_params(self):
        out = []
        out.extend(self.ihn.named_params("ihn"))
        out.extend(self.detail_encoder.named_params("detail_encoder"))
        out.extend(self.enc_g.named_params("enc_g"))
        out.extend(self.enc_d.named_params("enc_d"))
        out.extend(self.decoder.named_params("decoder"))
        return out

    def params(self):
        return [p for _, p in self.named_params()]

    def cover_dims(self):
        return (self.config.cover_h, self.config.cover_w)


# ---------------------------------------------------------------------------
# forward graphs (shared by inference and training)


@dataclass
class HideState:
    cover: np.ndarray
    secret: np.ndarray
    x_g: np.ndarray
    residual: np.ndarray
    x_d: ad.Tensor
    m_e: np.ndarray
    stego: ad.Tensor
    n: ad.Tensor


def hide_graph(model, cover, secret):
    cfg = model.config
    cover = check_cover(cover, cfg)
    secret = check_secret(secret, cfg)

    if cfg.fda_enabled:
        x_g, residual = fda.decompose(secret, model.cover_dims())
        x_d = fda.encode_detail(residual, model.detail_encoder, model.cover_dims())
    else:
        # ablated hiding: plain resample, nothing carried in the latent
        x_g = imaging.resample(secret, model.cover_dims())
        residual = np.zeros_like(secret)
        x_d = ad.Tensor(np.zeros((cfg.cover_h, cfg.cover_w, cfg.c_lat)))

    word = irc.quantize_resolution(secret.shape[0], secret.shape[1], cfg.res_bits)
    m_e = irc.encode_map(word, (cfg.cover_h // 2, cfg.cover_w // 2))

    payload = ad.concat(
        [ad.Tensor(wavelet.dwt2_raw(x_g)), wavelet.dwt2(x_d), ad.Tensor(m_e[:, :, None])],
        axis=-1)
    stego_freq, n = model.ihn.hide(ad.Tensor(wavelet.dwt2_raw(cover)), payload)
    return HideState(cover=cover, secret=secret, x_g=x_g, residual=residual, x_d=x_d,
                     m_e=m_e, stego=wavelet.iwt2(stego_freq), n=n)


def reveal_graph(model, stego, aux_mode=None, aux_seed=0):
    """Invert the hiding network from a stego tensor.

    Returns (basis estimate, latent estimate, resolution-map estimate)
    as graph tensors at (Hc, Wc, 3), (Hc, Wc, c_lat), (Hc/2, Wc/2, 1).
    """
    cfg = model.config
    if not isinstance(stego, ad.Tensor):
        stego = ad.Tensor(stego)
    n_prime = ad.Tensor(sample_aux(cfg.payload_shape(), aux_mode or cfg.aux_mode, aux_seed))
    _, payload_est = model.ihn.reveal(wavelet.dwt2(stego), n_prime)
    c = 4 * cfg.c_lat
    x_rg = wavelet.iwt2(ad.slice_channels(payload_est, 0, 12))
    x_rd = wavelet.iwt2(ad.slice_channels(payload_est, 12, 12 + c))
    m_re = ad.slice_channels(payload_est, 12 + c, 12 + c + 1)
    return x_rg, x_rd, m_re


# ---------------------------------------------------------------------------
# public inference


def hide(model, cover, secret):
    """Embed a secret; returns (stego image in [0, 1], lost-information n)."""
    with ad.no_grad():
        state = hide_graph(model, cover, secret)
    return imaging.clamp01(state.stego.data), state.n.data


@dataclass
class RevealResult:
    secret: np.ndarray
    size: tuple
    margin: float
    warning: str | None = None


def reveal(model, stego, margin_threshold=DEFAULT_MARGIN_THRESHOLD):
    """Blind recovery: stego in, secret at its decoded resolution out.

    The decode margin (weakest stripe vote) is always reported; a value
    below margin_threshold attaches a warning rather than failing, since
    the decoded dims may still be correct.
    """
    cfg = model.config
    stego = check_cover(stego, cfg)
    with ad.no_grad():
        x_rg_t, x_rd_t, m_re_t = reveal_graph(model, stego)
        m_re = m_re_t.data[:, :, 0]
        size = irc.decode_map(m_re, cfg.res_bits)
        margin = float(irc.stripe_margin(m_re, cfg.res_bits).min())
        if size[0] < 1 or size[1] < 1:
            raise PipelineError(
                f"decoded resolution {size} is degenerate (decode margin {margin:.4f}); "
                "the stego image does not carry a recoverable payload")
        warning = None
        if margin < margin_threshold:
            warning = (f"decode margin {margin:.4f} below threshold {margin_threshold}; "
                       f"decoded resolution {size[0]}x{size[1]} may be unreliable")
            warnings.warn(warning, RuntimeWarning, stacklevel=2)
        if cfg.lgir_enabled:
            grid = lgir.build_latent(x_rg_t, x_rd_t, model.enc_g, model.enc_d, cfg.feat_unfold)
            out = lgir.render(grid, x_rg_t, size, model.decoder)
        else:
            out = imaging.resample(imaging.clamp01(x_rg_t.data), size)
    return RevealResult(secret=out, size=size, margin=margin, warning=warning)


# ---------------------------------------------------------------------------
# training objective


def training_loss(model, cover, secret, query_rng=None):
    """Build the full hide+reveal graph and the weighted five-term loss.

    Returns (total loss Tensor, float breakdown per term).  The secret
    term is evaluated on a random pixel subset (query_samples) so the
    implicit renderer stays affordable inside the step loop.
    """
    cfg = model.config
    state = hide_graph(model, cover, secret)
    x_rg_t, x_rd_t, m_re_t = reveal_graph(model, state.stego)

    sh, sw = state.secret.shape[:2]
    n_pix = sh * sw
    if query_rng is not None and cfg.query_samples < n_pix:
        pix = query_rng.choice(n_pix, size=cfg.query_samples, replace=False)
    else:
        pix = np.arange(n_pix)
    secret_rows = ad.Tensor(state.secret.reshape(n_pix, 3)[pix])

    if cfg.lgir_enabled:
        grid = lgir.build_latent(x_rg_t, x_rd_t, model.enc_g, model.enc_d, cfg.feat_unfold)
        rendered = lgir.render_pixels(grid, x_rg_t, (sh, sw), model.decoder, pixel_idx=pix)
    else:
        up = ad.reshape(imaging.resample_tensor(x_rg_t, (sh, sw)), (n_pix, 3))
        rendered = ad.take_rows(up, pix)

    terms = {
        "stego": (cfg.lambda_stego, ad.mse(state.stego, ad.Tensor(state.cover))),
        "secret": (cfg.lambda_secret, ad.mse(rendered, secret_rows)),
        "basis": (cfg.lambda_basis, ad.mse(x_rg_t, ad.Tensor(state.x_g))),
        "latent": (cfg.lambda_latent, ad.mse(x_rd_t, state.x_d)),
        "map": (cfg.lambda_map, ad.mse(m_re_t, ad.Tensor(state.m_e[:, :, None]))),
    }
    total = None
    breakdown = {}
    for name, (weight, term) in terms.items():
        value = term.item()
        if not np.isfinite(value):
            raise FloatingPointError(f"loss term '{name}' is non-finite ({value})")
        breakdown[name] = value
        weighted = ad.mul_scalar(term, weight)
        total = weighted if total is None else ad.add(total, weighted)
    breakdown["total"] = total.item()
    return total, breakdown, state, m_re_t


# ---------------------------------------------------------------------------
# training loop


def _load_dataset(data_dir):
    names = sorted(f for f in os.listdir(data_dir) if f.lower().endswith(".png"))
    images = [imaging.load_image(os.path.join(data_dir, f), expand_gray=True) for f in names]
    return names, images


def _sample_pair(images, cfg, rng):
    """Draw a cover at model dims and a secret at a random in-range size."""
    ci, si = rng.integers(0, len(images)), rng.integers(0, len(images))
    cover = imaging.resample(images[ci], (cfg.cover_h, cfg.cover_w))
    sh = int(round(cfg.cover_h * rng.uniform(cfg.scale_min, cfg.scale_max)))
    sw = int(round(cfg.cover_w * rng.uniform(cfg.scale_min, cfg.scale_max)))
    limit = cfg.max_secret_dim()
    sh, sw = min(max(sh, 8), limit), min(max(sw, 8), limit)
    secret = imaging.resample(images[si], (sh, sw))
    return cover, secret


def train(config, data, out_path=None, log_path=None, resume=None, seed=None):
    """Train a model; returns (model, adam state, list of log rows).

    data is a directory of PNGs or a list of in-memory images (at least
    two).  resume is an existing (model, adam_state) pair to continue
    from; seed overrides the config seed for sampling.
    """
    from . import checkpoint as ckpt

    config.validate()
    if isinstance(data, (str, os.PathLike)):
        if not os.path.isdir(data):
            raise PipelineError(f"dataset directory not found: {data}")
        _, images = _load_dataset(data)
    else:
        images = [check_image(im, "dataset image") for im in data]
    if len(images) < 2:
        raise PipelineError(f"training needs at least 2 images, found {len(images)}")

    if resume is not None:
        model, state = resume
    else:
        model = ArdisModel(config)
        state = ad.AdamState(model.params())
    params = model.params()

    sample_rng = np.random.default_rng(config.seed if seed is None else seed)
    rows = []
    start = state.step_count
    for step in range(start, config.total_steps):
        lr = ad.cosine_lr(step, config.total_steps, config.lr0)
        ad.zero_grads(params)
        breakdown = None
        for _ in range(config.batch_size):
            cover, secret = _sample_pair(images, config, sample_rng)
            total, breakdown, state_h, m_re_t = training_loss(model, cover, secret, sample_rng)
            if config.batch_size > 1:
                total = ad.mul_scalar(total, 1.0 / config.batch_size)
            ad.backward(total)
        ad.adam_step(params, None, state, lr)

        if (step + 1) % config.log_interval == 0 or step + 1 == config.total_steps:
            row = _log_row(step + 1, lr, breakdown, state_h, m_re_t, config)
            rows.append(row)
            if out_path is not None:
                ckpt.save_checkpoint(model, out_path, state)
    if out_path is not None:
        ckpt.save_checkpoint(model, out_path, state)
    if log_path is not None:
        _write_log(log_path, rows)
    return model, state, rows


def _log_row(step, lr, breakdown, state_h, m_re_t, cfg):
    stego = imaging.clamp01(state_h.stego.data)
    with warnings.catch_warnings():
        # ties are routine while the map term is still untrained
        warnings.simplefilter("ignore", RuntimeWarning)
        decoded = irc.decode_map(m_re_t.data[:, :, 0], cfg.res_bits)
    row = {"step": step, "lr": lr}
    row.update(breakdown)
    row["stego_psnr"] = metrics.psnr(stego, state_h.cover)
    # secret quality over the sampled query pixels, so the row stays cheap
    mse_secret = breakdown["secret"]
    row["secret_psnr"] = metrics.PSNR_CAP_DB if mse_secret == 0 else min(
        metrics.PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse_secret))
    row["rre"] = metrics.rre(decoded, state_h.secret.shape[:2])
    return row


def _write_log(path, rows):
    import csv

    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
