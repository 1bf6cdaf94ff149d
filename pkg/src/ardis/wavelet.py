"""Single-level orthonormal 2D Haar transform and its exact inverse.

For each 2x2 block (a, b / c, d) of a channel the four subbands are

    LL = (a + b + c + d) / 2      LH = (a - b + c - d) / 2
    HL = (a + b - c - d) / 2      HH = (a - b - c + d) / 2

so a (H, W, C) input becomes (H/2, W/2, 4C) with subbands interleaved
per input channel: output channel 4c + k holds subband k of channel c.
The /2 normalization makes the transform orthonormal, so energy is
preserved and the backward pass of each direction is simply the raw
kernel of the other.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


def _check_spatial(x):
    if x.ndim != 3:
        raise ValueError(f"dwt2 expects (H, W, C), got {x.shape}")
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError(f"dwt2 needs even spatial dims, got {x.shape[:2]}")


def _check_freq(f):
    if f.ndim != 3:
        raise ValueError(f"iwt2 expects (H, W, C), got {f.shape}")
    if f.shape[2] % 4:
        raise ValueError(f"iwt2 needs a multiple of 4 channels, got {f.shape[2]}")


def dwt2_raw(x):
    _check_spatial(x)
    a = x[0::2, 0::2, :]
    b = x[0::2, 1::2, :]
    c = x[1::2, 0::2, :]
    d = x[1::2, 1::2, :]
    hh, hw, ch = a.shape
    out = np.empty((hh, hw, 4 * ch), dtype=x.dtype)
    out[:, :, 0::4] = (a + b + c + d) * 0.5
    out[:, :, 1::4] = (a - b + c - d) * 0.5
    out[:, :, 2::4] = (a + b - c - d) * 0.5
    out[:, :, 3::4] = (a - b - c + d) * 0.5
    return out


def iwt2_raw(f):
    _check_freq(f)
    ll = f[:, :, 0::4]
    lh = f[:, :, 1::4]
    hl = f[:, :, 2::4]
    hh = f[:, :, 3::4]
    h2, w2, ch = ll.shape
    out = np.empty((2 * h2, 2 * w2, ch), dtype=f.dtype)
    out[0::2, 0::2, :] = (ll + lh + hl + hh) * 0.5
    out[0::2, 1::2, :] = (ll - lh + hl - hh) * 0.5
    out[1::2, 0::2, :] = (ll + lh - hl - hh) * 0.5
    out[1::2, 1::2, :] = (ll - lh - hl + hh) * 0.5
    return out


def dwt2(x):
    """Forward Haar transform; accepts an ndarray or a graph Tensor."""
    if not isinstance(x, ad.Tensor):
        return dwt2_raw(np.asarray(x, dtype=np.float64))

    def backward(g):
        # orthonormal: the transpose of the analysis map is the synthesis map
        return ((x, iwt2_raw(g)),)

    return ad._result(dwt2_raw(x.data), (x,), backward, "dwt2")


def iwt2(f):
    """Inverse Haar transform; accepts an ndarray or a graph Tensor."""
    if not isinstance(f, ad.Tensor):
        return iwt2_raw(np.asarray(f, dtype=np.float64))

    def backward(g):
        return ((f, dwt2_raw(g)),)

    return ad._result(iwt2_raw(f.data), (f,), backward, "iwt2")
