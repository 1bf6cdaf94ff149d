"""Frequency decoupling: split a secret into a cover-aligned basis and a
compact high-frequency detail latent.

``decompose`` is purely linear resampling, so the residual it returns
reconstructs the secret exactly: resampling the basis back to secret
resolution and adding the residual is an identity by construction.

The detail encoder must emit a fixed (Hc, Wc, c_lat) latent for any
input resolution.  It folds the residual space-to-depth by an adaptive
factor k (moving sub-pixel phases into groups instead of smearing them
with interpolation), snaps each phase group to the cover grid, runs a
shared conv stack over every group and averages the group latents.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from . import imaging
from .layers import ConvStack


def decompose(x_sec, cover_dims):
    """Return (global basis at cover dims, exact residual at secret dims)."""
    x_sec = np.asarray(x_sec, dtype=np.float64)
    x_g = imaging.resample(x_sec, cover_dims)
    r = x_sec - imaging.resample(x_g, x_sec.shape[:2])
    return x_g, r


def fold_factor(secret_dims, cover_dims):
    scale = max(secret_dims[0] / cover_dims[0], secret_dims[1] / cover_dims[1])
    return max(1, int(math.ceil(scale)))


def fold_residual(r, cover_dims):
    """Rearrange a (H, W, C) residual into k*k phase groups on the cover grid.

    Output shape (k*k, Hc, Wc, C); the input is zero-padded symmetrically
    to a multiple of k before the space-to-depth split, and each phase is
    resampled (unclamped, values are signed) to the cover dims.
    """
    r = np.asarray(r, dtype=np.float64)
    h, w, c = r.shape
    hc, wc = int(cover_dims[0]), int(cover_dims[1])
    k = fold_factor((h, w), (hc, wc))
    hp = k * math.ceil(h / k)
    wp = k * math.ceil(w / k)
    top, left = (hp - h) // 2, (wp - w) // 2
    padded = np.zeros((hp, wp, c))
    padded[top:top + h, left:left + w, :] = r
    groups = np.empty((k * k, hc, wc, c))
    for di in range(k):
        for dj in range(k):
            phase = padded[di::k, dj::k, :]
            groups[di * k + dj] = imaging.resample_raw(phase, (hc, wc))
    return groups


class DetailEncoder:
    """Shared-weight conv stack over folded residual phases."""

    def __init__(self, rng, c_lat=4, width=32, padding="zero"):
        self.c_lat = c_lat
        self.stack = ConvStack(rng, 3, c_lat, width, padding)

    def __call__(self, r, cover_dims):
        return encode_detail(r, self, cover_dims)

    def named_params(self, prefix="detail_encoder"):
        return self.stack.named_params(prefix)


def encode_detail(r, encoder, cover_dims):
    """Encode a residual into the fixed-grid detail latent (a graph Tensor).

    The residual is clamped to [-1, 1] here (encoding input only; the
    unclamped residual stays authoritative for reconstruction).
    """
    groups = fold_residual(np.clip(r, -1.0, 1.0), cover_dims)
    total = None
    for g in groups:
        out = encoder.stack(ad.Tensor(g))
        total = out if total is None else ad.add(total, out)
    return ad.mul_scalar(total, 1.0 / len(groups))
