"""Input validation helpers for the public pipeline surfaces."""

from __future__ import annotations

import numpy as np


def check_image(img, name="image", channels=None, min_size=8):
    """Validate and return an (H, W, C) float image in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"{name}: expected (H, W, 1|3) array, got shape {arr.shape}")
    if channels is not None and arr.shape[2] != channels:
        raise ValueError(f"{name}: expected {channels} channels, got {arr.shape[2]}")
    if arr.shape[0] < min_size or arr.shape[1] < min_size:
        raise ValueError(f"{name}: {arr.shape[0]}x{arr.shape[1]} is below the {min_size}px minimum")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name}: values outside [0, 1] (range {arr.min():.4g}..{arr.max():.4g})")
    return arr


def check_cover(img, config):
    arr = check_image(img, "cover", channels=3)
    if arr.shape[:2] != (config.cover_h, config.cover_w):
        raise ValueError(
            f"cover is {arr.shape[0]}x{arr.shape[1]} but the model expects "
            f"{config.cover_h}x{config.cover_w}")
    return arr


def check_secret(img, config):
    arr = check_image(img, "secret", channels=3)
    limit = config.max_secret_dim()
    h, w = arr.shape[:2]
    if h > limit or w > limit:
        raise ValueError(
            f"secret is {h}x{w}; dims beyond {limit} cannot be encoded in "
            f"{config.res_bits} resolution bits")
    return arr
