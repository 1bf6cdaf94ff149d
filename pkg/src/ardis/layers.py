"""Small learnable building blocks shared by the network modules."""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad


class Conv:
    """One convolution layer owning its kernel and bias.

    He-normal kernel and uniform +-1/sqrt(fan_in) bias by default;
    zero_init gives an exactly-zero layer (bias included) so a stack
    ending in it starts as the zero map.  Nonzero bias init keeps unit
    pre-activations off the exact relu kink, which dead zero-bias rows
    would otherwise sit on.
    """

    def __init__(self, rng, cin, cout, ksize=3, padding="zero", zero_init=False):
        fan_in = ksize * ksize * cin
        if zero_init:
            w = np.zeros((ksize, ksize, cin, cout))
            b = np.zeros(cout)
        else:
            w = rng.standard_normal((ksize, ksize, cin, cout)) * math.sqrt(2.0 / fan_in)
            b = rng.uniform(-1.0, 1.0, cout) / math.sqrt(fan_in)
        self.w = ad.Tensor(w, requires_grad=True)
        self.b = ad.Tensor(b, requires_grad=True)
        self.padding = padding

    def __call__(self, x):
        return ad.conv2d(x, self.w, self.b, padding=self.padding)

    def named_params(self, prefix):
        return [(f"{prefix}.w", self.w), (f"{prefix}.b", self.b)]


class Linear:
    def __init__(self, rng, nin, nout):
        w = rng.standard_normal((nin, nout)) * math.sqrt(2.0 / nin)
        b = rng.uniform(-1.0, 1.0, nout) / math.sqrt(nin)
        self.w = ad.Tensor(w, requires_grad=True)
        self.b = ad.Tensor(b, requires_grad=True)

    def __call__(self, x):
        return ad.add_bias(ad.matmul(x, self.w), self.b)

    def named_params(self, prefix):
        return [(f"{prefix}.w", self.w), (f"{prefix}.b", self.b)]


class ConvStack:
    """conv3x3 -> relu -> conv3x3 -> relu -> conv1x1.

    The common subnetwork shape used throughout: hidden width `width`,
    optional zero init of the final projection.
    """

    def __init__(self, rng, cin, cout, width, padding="zero", zero_last=False):
        self.layers = [
            Conv(rng, cin, width, 3, padding),
            Conv(rng, width, width, 3, padding),
            Conv(rng, width, cout, 1, padding, zero_init=zero_last),
        ]

    def __call__(self, x):
        x = ad.relu(self.layers[0](x))
        x = ad.relu(self.layers[1](x))
        return self.layers[2](x)

    def named_params(self, prefix):
        out = []
        for i, layer in enumerate(self.layers):
            out.extend(layer.named_params(f"{prefix}.conv{i}"))
        return out
