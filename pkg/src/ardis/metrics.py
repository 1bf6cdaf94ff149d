"""Quality and resolution-accuracy metrics: PSNR, SSIM, RRE.

All image metrics operate on [0, 1] float arrays (peak 1.0).  SSIM uses
the canonical parameters: 11x11 Gaussian window with sigma 1.5, K1=0.01,
K2=0.03, local statistics from a 'valid' convolution, channel-averaged.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

PSNR_CAP_DB = 100.0


def psnr(a, b):
    """Peak signal-to-noise ratio in dB, capped at 100 for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr: shapes {a.shape} and {b.shape} differ")
    err = float(np.mean((a - b) ** 2))
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / err))


def _gaussian_window(size=11, sigma=1.5):
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x, g):
    # separable 'valid' correlation along both spatial axes
    k = g.size
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=0)
    x = win @ g
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=1)
    return win @ g


def ssim(a, b, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean structural similarity between two [0, 1] images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim: shapes {a.shape} and {b.shape} differ")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    if a.shape[0] < window or a.shape[1] < window:
        raise ValueError(f"ssim: image {a.shape[:2]} smaller than the {window}x{window} window")
    g = _gaussian_window(window, sigma)
    c1 = k1 * k1
    c2 = k2 * k2
    vals = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mx = _filter_valid(x, g)
        my = _filter_valid(y, g)
        vx = _filter_valid(x * x, g) - mx * mx
        vy = _filter_valid(y * y, g) - my * my
        vxy = _filter_valid(x * y, g) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * vxy + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))


def rre(predicted, truth):
    """Relative resolution error in percent.

    Mean of the per-dimension relative deviations between the predicted
    and true (H, W), times 100.
    """
    ph, pw = predicted
    th, tw = truth
    if th <= 0 or tw <= 0:
        raise ValueError(f"rre: ground-truth dims must be positive, got {truth}")
    return 50.0 * (abs(ph - th) / th + abs(pw - tw) / tw)


# ---------------------------------------------------------------------------
# CSV reporting


@dataclass
class MetricRow:
    id: str
    stego_psnr: float
    stego_ssim: float
    secret_psnr: float
    secret_ssim: float
    rre_percent: float


def aggregate(rows):
    """Arithmetic mean of every numeric column, reported under id 'mean'."""
    if not rows:
        raise ValueError("aggregate: no rows")
    cols = [f.name for f in fields(MetricRow) if f.name != "id"]
    means = {c: float(np.mean([getattr(r, c) for r in rows])) for c in cols}
    return MetricRow(id="mean", **means)


def write_report(path, rows, include_aggregate=True):
    """Write per-image metric rows (plus the aggregate row) as CSV."""
    out = list(rows)
    if include_aggregate:
        out.append(aggregate(rows))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in fields(MetricRow)])
        for r in out:
            writer.writerow([r.id] + [f"{getattr(r, c.name):.6f}" for c in fields(MetricRow)[1:]])
