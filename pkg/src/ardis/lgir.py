"""Latent-guided implicit reconstruction at arbitrary target resolution.

A latent grid at cover resolution conditions a coordinate MLP.  Each
query point in [-1, 1]^2 is decoded from the four surrounding latent
codes, blended with local-ensemble weights (the area of the rectangle
spanned by the query and the diagonally opposite latent, normalized to
sum to 1), and the result is added as a residual on top of the
bicubically resampled global basis.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import imaging
from .layers import Conv, Linear


def pixel_centers(n):
    """Centers of n pixels, normalized to [-1, 1]."""
    return -1.0 + (2.0 * np.arange(n) + 1.0) / n


def target_coords(target):
    """Row-major (y, x) center coordinates of every target pixel, (H*W, 2)."""
    ys = pixel_centers(int(target[0]))
    xs = pixel_centers(int(target[1]))
    return np.stack(np.meshgrid(ys, xs, indexing="ij"), axis=-1).reshape(-1, 2)


def cell_decoding(target, grid_dims):
    """Per-axis query footprint fed to the decoder, capped at 2.

    c = 2 / (r * n_target) with r = n_target / n_grid the scale factor;
    values beyond 2 (targets far below grid resolution) are clipped to
    the supported cell range.
    """
    th, tw = int(target[0]), int(target[1])
    gh, gw = int(grid_dims[0]), int(grid_dims[1])
    if th < 1 or tw < 1:
        raise ValueError(f"cell_decoding: target must be positive, got {(th, tw)}")
    cy = 2.0 / ((th / gh) * th)
    cx = 2.0 / ((tw / gw) * tw)
    return min(2.0, cy), min(2.0, cx)


def ensemble_weights(x_q, grid_dims):
    """Four nearest latent codes for each query with their blend weights.

    Returns (idx, coords, weights): idx is (N, 4, 2) integer grid indices
    in corner order (00, 01, 10, 11), coords the matching latent centers,
    and weights the normalized areas (each from the diagonally opposite
    corner's rectangle), non-negative and summing to 1 per query.  Edge
    queries clamp their neighbor indices into the grid.
    """
    xq = np.asarray(x_q, dtype=np.float64)
    squeeze = xq.ndim == 1
    xq = np.atleast_2d(xq)
    n = xq.shape[0]
    gh, gw = int(grid_dims[0]), int(grid_dims[1])
    if gh < 2 or gw < 2:
        raise ValueError(f"ensemble_weights: grid must be at least 2x2, got {(gh, gw)}")

    fy = (xq[:, 0] + 1.0) * gh / 2.0 - 0.5
    fx = (xq[:, 1] + 1.0) * gw / 2.0 - 0.5
    i0 = np.clip(np.floor(fy).astype(np.intp), 0, gh - 2)
    j0 = np.clip(np.floor(fx).astype(np.intp), 0, gw - 2)

    cy = pixel_centers(gh)
    cx = pixel_centers(gw)
    idx = np.empty((n, 4, 2), dtype=np.intp)
    coords = np.empty((n, 4, 2))
    areas = np.empty((n, 4))
    for t, (di, dj) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        iy, ix = i0 + di, j0 + dj
        idx[:, t, 0], idx[:, t, 1] = iy, ix
        coords[:, t, 0], coords[:, t, 1] = cy[iy], cx[ix]
        areas[:, t] = np.abs(xq[:, 0] - cy[iy]) * np.abs(xq[:, 1] - cx[ix])

    # each corner is weighted by the rectangle opposite to it
    opposite = areas[:, [3, 2, 1, 0]]
    weights = opposite / opposite.sum(axis=1, keepdims=True)
    if squeeze:
        return idx[0], coords[0], weights[0]
    return idx, coords, weights


class FeatureEncoder:
    """Three 3x3 conv layers with relu between, fixed output width."""

    def __init__(self, rng, cin, width=32, padding="zero"):
        self.width = width
        self.convs = [Conv(rng, cin, width, 3, padding),
                      Conv(rng, width, width, 3, padding),
                      Conv(rng, width, width, 3, padding)]

    def __call__(self, x):
        x = ad.relu(self.convs[0](x))
        x = ad.relu(self.convs[1](x))
        return self.convs[2](x)

    def named_params(self, prefix):
        out = []
        for i, conv in enumerate(self.convs):
            out.extend(conv.named_params(f"{prefix}.conv{i}"))
        return out


class ImplicitDecoder:
    """Coordinate MLP: fully-connected layers with relu, rgb output."""

    def __init__(self, rng, in_dim, width=256, depth=4, out_dim=3):
        if depth < 2:
            raise ValueError(f"decoder needs at least 2 layers, got {depth}")
        dims = [in_dim] + [width] * (depth - 1) + [out_dim]
        self.layers = [Linear(rng, dims[i], dims[i + 1]) for i in range(depth)]

    def __call__(self, x):
        for layer in self.layers[:-1]:
            x = ad.relu(layer(x))
        return self.layers[-1](x)

    def named_params(self, prefix="decoder"):
        out = []
        for i, layer in enumerate(self.layers):
            out.extend(layer.named_params(f"{prefix}.fc{i}"))
        return out


def build_latent(x_rg, x_rd, enc_g, enc_d, feat_unfold=False):
    """Concatenate the basis and detail feature maps into one latent grid."""
    x_rg = x_rg if isinstance(x_rg, ad.Tensor) else ad.Tensor(x_rg)
    x_rd = x_rd if isinstance(x_rd, ad.Tensor) else ad.Tensor(x_rd)
    if x_rg.data.shape[:2] != x_rd.data.shape[:2]:
        raise ad.ShapeError(
            f"build_latent: spatial dims differ: {x_rg.data.shape} vs {x_rd.data.shape}")
    z = ad.concat([enc_g(x_rg), enc_d(x_rd)], axis=-1)
    if feat_unfold:
        z = _unfold3x3(z)
    return z


def _unfold3x3(z):
    """Concatenate each cell's 3x3 neighborhood (edge-replicated)."""
    gh, gw = z.data.shape[:2]
    iy, ix = np.meshgrid(np.arange(gh), np.arange(gw), indexing="ij")
    pieces = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            ny = np.clip(iy + dy, 0, gh - 1).reshape(-1)
            nx = np.clip(ix + dx, 0, gw - 1).reshape(-1)
            shifted = ad.gather_pixels(z, ny, nx)
            pieces.append(ad.reshape(shifted, (gh, gw, z.data.shape[2])))
    return ad.concat(pieces, axis=-1)


def query(grid, x_q, cell, decoder):
    """Ensemble-decoded residual prediction at continuous coordinates.

    grid is the latent Tensor (Hg, Wg, D); x_q is (N, 2) in [-1, 1]^2.
    Relative offsets are scaled by the grid dims before entering the MLP
    so their magnitude stays O(1).  Returns an (N, 3) Tensor.
    """
    grid = grid if isinstance(grid, ad.Tensor) else ad.Tensor(grid)
    xq = np.atleast_2d(np.asarray(x_q, dtype=np.float64))
    gh, gw = grid.data.shape[:2]
    idx, coords, weights = ensemble_weights(xq, (gh, gw))
    cell_rows = ad.Tensor(np.tile(np.asarray(cell, dtype=np.float64), (xq.shape[0], 1)))

    total = None
    for t in range(4):
        feats = ad.gather_pixels(grid, idx[:, t, 0], idx[:, t, 1])
        rel = (xq - coords[:, t]) * np.array([gh, gw], dtype=np.float64)
        pred = decoder(ad.concat([feats, ad.Tensor(rel), cell_rows], axis=-1))
        term = ad.row_scale(pred, weights[:, t])
        total = term if total is None else ad.add(total, term)
    return total


def render_pixels(grid, x_rg, target, decoder, pixel_idx=None):
    """Differentiable render at target pixel centers (subset via pixel_idx).

    Returns an (N, 3) Tensor of unclamped values: predicted residual plus
    the resampled basis at the same pixels.
    """
    x_rg = x_rg if isinstance(x_rg, ad.Tensor) else ad.Tensor(x_rg)
    th, tw = int(target[0]), int(target[1])
    coords = target_coords((th, tw))
    if pixel_idx is not None:
        coords = coords[pixel_idx]
    cell = cell_decoding((th, tw), grid.data.shape[:2])
    pred = query(grid, coords, cell, decoder)
    base = ad.reshape(imaging.resample_tensor(x_rg, (th, tw)), (th * tw, 3))
    if pixel_idx is not None:
        base = ad.take_rows(base, pixel_idx)
    return ad.add(pred, base)


def render(grid, x_rg, target, decoder, chunk=16384):
    """Full-image render to a clamped [0, 1] numpy array at target dims."""
    grid = grid if isinstance(grid, ad.Tensor) else ad.Tensor(grid)
    th, tw = int(target[0]), int(target[1])
    if th < 1 or tw < 1:
        raise ValueError(f"render: target must be positive, got {target}")
    coords = target_coords((th, tw))
    cell = cell_decoding((th, tw), grid.data.shape[:2])
    with ad.no_grad():
        parts = [query(grid, coords[lo:lo + chunk], cell, decoder).data
                 for lo in range(0, coords.shape[0], chunk)]
    residual = np.concatenate(parts, axis=0).reshape(th, tw, 3)
    x_rg_data = x_rg.data if isinstance(x_rg, ad.Tensor) else np.asarray(x_rg, dtype=np.float64)
    return imaging.clamp01(residual + imaging.resample_raw(x_rg_data, (th, tw)))
