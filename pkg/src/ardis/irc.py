"""In-band resolution coding: stripe broadcast and voting decode.

The secret's (H, W) is quantized to an L-bit word (L/2 bits per
dimension, MSB first, height before width) and broadcast into L disjoint
horizontal stripes of a half-resolution map, one repeated {-1, +1}
symbol per stripe.  Decoding takes the mean of each stripe and thresholds
at zero, so any per-pixel distortion whose stripe mean stays below 1 in
magnitude cancels out exactly.
"""

from __future__ import annotations

import warnings

import numpy as np


def quantize_resolution(h, w, nbits=32):
    """Pack (h, w) into an nbits-long 0/1 array, MSB first, h then w."""
    if nbits % 2:
        raise ValueError(f"bit count must be even, got {nbits}")
    half = nbits // 2
    limit = 1 << half
    for name, v in (("height", h), ("width", w)):
        if not 1 <= v < limit:
            raise ValueError(f"{name} {v} outside representable range [1, {limit - 1}]")
    bits = np.zeros(nbits, dtype=np.int64)
    for off, v in ((0, int(h)), (half, int(w))):
        for k in range(half):
            bits[off + k] = (v >> (half - 1 - k)) & 1
    return bits


def word_to_dims(bits):
    """Inverse of quantize_resolution (no range check: garbage in, garbage out)."""
    bits = np.asarray(bits)
    half = bits.size // 2
    h = int("".join(str(int(b)) for b in bits[:half]), 2)
    w = int("".join(str(int(b)) for b in bits[half:]), 2)
    return h, w


def stripe_slices(rows, nbits):
    """Partition `rows` rows into nbits horizontal bands.

    Remainder rows go one each to the leading stripes, so sizes differ by
    at most one row and the bands tile the map exactly.
    """
    if rows < nbits:
        raise ValueError(f"map has {rows} rows, needs at least {nbits} for {nbits} stripes")
    base, rem = divmod(rows, nbits)
    slices = []
    for k in range(nbits):
        start = k * base + min(k, rem)
        slices.append(slice(start, start + base + (1 if k < rem else 0)))
    return slices


def encode_map(word, dims):
    """Broadcast a bit word into a (rows, cols) map of {-1, +1} stripes."""
    word = np.asarray(word)
    rows, cols = int(dims[0]), int(dims[1])
    m = np.empty((rows, cols), dtype=np.float64)
    for k, sl in enumerate(stripe_slices(rows, word.size)):
        m[sl, :] = 2.0 * word[k] - 1.0
    return m


def decode_map(m, nbits=32):
    """Recover (h, w) by per-stripe mean voting; ties decode as bit 0."""
    m = np.asarray(m)
    means = stripe_means(m, nbits)
    if np.any(means == 0.0):
        warnings.warn("resolution decode: tied stripe vote (mean exactly 0), decoding as 0",
                      RuntimeWarning, stacklevel=2)
    bits = (means > 0.0).astype(np.int64)
    return word_to_dims(bits)


def stripe_means(m, nbits):
    m = np.asarray(m)
    return np.array([m[sl, :].mean() for sl in stripe_slices(m.shape[0], nbits)])


def stripe_margin(m, nbits=32):
    """Per-bit decode confidence: |stripe mean| for each stripe."""
    return np.abs(stripe_means(m, nbits))
