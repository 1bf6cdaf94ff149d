"""Image I/O and the adaptive bicubic resampling operator.

Images are float arrays of shape (H, W, C) with values in [0, 1], C in
{1, 3}.  PNG is the only supported container (8- or 16-bit, grayscale or
RGB); anything lossy would destroy the hidden signal.

Resampling uses the Catmull-Rom bicubic kernel (a = -0.5) with pixel
centers aligned at (i + 0.5) / N and edge taps clamped to the border.
Because the operator is linear in the pixel values it is exposed twice:
``resample`` for plain arrays and ``resample_tensor`` as a differentiable
graph op built from the same weight matrices.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

from . import autodiff as ad


class ImageError(ValueError):
    """File missing, unreadable, or outside the supported PNG subset."""


def clamp01(x):
    return np.clip(x, 0.0, 1.0)


def load_image(path, expand_gray=False):
    """Load an 8- or 16-bit PNG as a float (H, W, C) array in [0, 1].

    Grayscale files come back with C=1 unless expand_gray is set, in
    which case the single channel is replicated to RGB.
    """
    if not os.path.isfile(path):
        raise ImageError(f"image file not found: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageError(f"could not decode image (not a supported PNG?): {path}")
    if raw.dtype == np.uint8:
        peak = 255.0
    elif raw.dtype == np.uint16:
        peak = 65535.0
    else:
        raise ImageError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 2:
        img = raw[:, :, None].astype(np.float64) / peak
        if expand_gray:
            img = np.repeat(img, 3, axis=2)
        return img
    if raw.ndim == 3 and raw.shape[2] == 3:
        return raw[:, :, ::-1].astype(np.float64) / peak
    raise ImageError(f"unsupported channel layout {raw.shape} in {path} (alpha is not supported)")


def save_image(path, img, bits16=False):
    """Write a [0, 1] float image as an 8-bit (default) or 16-bit PNG."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ImageError(f"save_image expects (H, W, 1|3), got {img.shape}")
    peak = 65535.0 if bits16 else 255.0
    dtype = np.uint16 if bits16 else np.uint8
    q = np.rint(clamp01(img) * peak).astype(dtype)
    out = q[:, :, 0] if q.shape[2] == 1 else q[:, :, ::-1]
    if not cv2.imwrite(str(path), out):
        raise ImageError(f"could not write image: {path}")


# ---------------------------------------------------------------------------
# bicubic resampling


def cubic_kernel(s):
    """Catmull-Rom cubic (a = -0.5), the common 'bicubic' convention."""
    s = np.abs(np.asarray(s, dtype=np.float64))
    near = (1.5 * s - 2.5) * s * s + 1.0
    far = ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0
    return np.where(s <= 1.0, near, np.where(s < 2.0, far, 0.0))


def resample_weights(n_in, n_out):
    """Dense (n_out, n_in) interpolation matrix for one axis.

    Pixel centers sit at (i + 0.5) / N; the four kernel taps around each
    source coordinate are clamped to the border, so every row sums to 1.
    """
    if n_out < 1 or n_in < 1:
        raise ValueError(f"resample_weights: sizes must be positive, got {n_in} -> {n_out}")
    w = np.zeros((n_out, n_in))
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    for k in range(-1, 3):
        tap = np.clip(base + k, 0, n_in - 1)
        np.add.at(w, (np.arange(n_out), tap), cubic_kernel(frac - k))
    return w


def resample(x, target):
    """Resize to target (H, W) by separable Catmull-Rom interpolation.

    Works as both down- and upsampler; output is clamped to [0, 1].
    A same-size target returns an exact copy.
    """
    return clamp01(resample_raw(x, target))


def resample_raw(x, target):
    """resample without the final [0, 1] clamp, for signed tensors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"resample expects (H, W, C), got {x.shape}")
    h_out, w_out = int(target[0]), int(target[1])
    if h_out < 1 or w_out < 1:
        raise ValueError(f"resample: target must be positive, got {(h_out, w_out)}")
    if (h_out, w_out) == x.shape[:2]:
        return x.copy()
    wr = resample_weights(x.shape[0], h_out)
    wc = resample_weights(x.shape[1], w_out)
    return _apply_separable(x, wr, wc)


def _apply_separable(x, wr, wc):
    tmp = np.tensordot(wr, x, axes=(1, 0))           # (H_out, W_in, C)
    return np.tensordot(tmp, wc, axes=(1, 1)).transpose(0, 2, 1)


def resample_tensor(x, target):
    """Differentiable resample (no clamping) for use inside loss graphs."""
    h_in, w_in = x.data.shape[0], x.data.shape[1]
    h_out, w_out = int(target[0]), int(target[1])
    if h_out < 1 or w_out < 1:
        raise ValueError(f"resample_tensor: target must be positive, got {(h_out, w_out)}")
    wr = resample_weights(h_in, h_out)
    wc = resample_weights(w_in, w_out)
    out = _apply_separable(x.data, wr, wc)

    def backward(g):
        return ((x, _apply_separable(g, wr.T, wc.T)),)

    return ad._result(out, (x,), backward, "resample")
