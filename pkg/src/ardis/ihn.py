"""Invertible hiding network: stacked affine coupling blocks.

Each block updates the cover branch additively from the payload branch,
then rescales-and-shifts the payload branch from functions of the new
cover branch:

    y1 = x1 + psi(x2)
    y2 = x2 * exp(clamp * tanh(rho(y1))) + eta(y1)

The inverse is algebraic, so reveal-after-hide is exact for any
parameter values.  The per-channel learnable clamp bounds the log-scale
magnitude (|tanh| <= 1); the final conv of every subnetwork starts at
zero, which makes the untrained stack an identity map.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .layers import ConvStack


def sample_aux(shape, mode="zeros", seed=0):
    """Substitute payload branch for blind revealing.

    zeros is the deterministic default; gaussian draws a seeded standard
    normal for parity with the usual flow-model convention.
    """
    if mode == "zeros":
        return np.zeros(shape)
    if mode == "gaussian":
        return np.random.default_rng(seed).standard_normal(shape)
    raise ValueError(f"unknown aux mode {mode!r}")


class CouplingBlock:
    def __init__(self, rng, cover_ch, payload_ch, width=32, clamp_init=2.0, padding="zero"):
        self.psi = ConvStack(rng, payload_ch, cover_ch, width, padding, zero_last=True)
        self.rho = ConvStack(rng, cover_ch, payload_ch, width, padding, zero_last=True)
        self.eta = ConvStack(rng, cover_ch, payload_ch, width, padding, zero_last=True)
        self.clamp = ad.Tensor(np.full(payload_ch, float(clamp_init)), requires_grad=True)

    def _log_scale(self, y1):
        return ad.channel_scale(ad.tanh(self.rho(y1)), self.clamp)

    def forward(self, x1, x2):
        y1 = ad.add(x1, self.psi(x2))
        y2 = ad.add(ad.mul(x2, ad.exp(self._log_scale(y1))), self.eta(y1))
        return y1, y2

    def inverse(self, y1, y2):
        x2 = ad.mul(ad.sub(y2, self.eta(y1)), ad.exp(ad.mul_scalar(self._log_scale(y1), -1.0)))
        x1 = ad.sub(y1, self.psi(x2))
        return x1, x2

    def named_params(self, prefix):
        out = []
        for name, net in (("psi", self.psi), ("rho", self.rho), ("eta", self.eta)):
            out.extend(net.named_params(f"{prefix}.{name}"))
        out.append((f"{prefix}.clamp", self.clamp))
        return out


class InvertibleHidingNetwork:
    """A fixed-depth stack of coupling blocks over frequency features."""

    def __init__(self, rng, cover_ch, payload_ch, n_blocks=8, width=32,
                 clamp_init=2.0, padding="zero"):
        self.cover_ch = cover_ch
        self.payload_ch = payload_ch
        self.blocks = [CouplingBlock(rng, cover_ch, payload_ch, width, clamp_init, padding)
                       for _ in range(n_blocks)]

    def _check(self, cover, payload):
        cs, ps = cover.data.shape, payload.data.shape
        if cs[:2] != ps[:2]:
            raise ad.ShapeError(f"ihn: branch spatial dims differ: {cs} vs {ps}")
        if cs[2] != self.cover_ch or ps[2] != self.payload_ch:
            raise ad.ShapeError(
                f"ihn: expected channels ({self.cover_ch}, {self.payload_ch}), "
                f"got ({cs[2]}, {ps[2]})")

    def hide(self, cover_freq, payload_freq):
        """Run all blocks forward; returns (stego branch, lost information n)."""
        self._check(cover_freq, payload_freq)
        x1, x2 = cover_freq, payload_freq
        for block in self.blocks:
            x1, x2 = block.forward(x1, x2)
        return x1, x2

    def reveal(self, stego_freq, n_prime):
        """Run all blocks inverse; returns (cover estimate, payload estimate)."""
        self._check(stego_freq, n_prime)
        y1, y2 = stego_freq, n_prime
        for block in reversed(self.blocks):
            y1, y2 = block.inverse(y1, y2)
        return y1, y2

    def named_params(self, prefix="ihn"):
        out = []
        for i, block in enumerate(self.blocks):
            out.extend(block.named_params(f"{prefix}.block{i}"))
        return out
