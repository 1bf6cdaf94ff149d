import math

import numpy as np
import pytest

from ardis import autodiff as ad
from ardis.ihn import CouplingBlock, InvertibleHidingNetwork, sample_aux


def randomize(named, rng, scale=0.5, dtype=np.float64):
    """Replace the zero-init subnet tails with random weights at a scale
    where branch magnitudes stay bounded (trained-network regime)."""
    for name, p in named:
        if "clamp" in name:
            p.data = np.full_like(p.data, 2.0).astype(dtype)
        elif name.endswith(".b"):
            p.data = (rng.standard_normal(p.data.shape) * 0.05).astype(dtype)
        else:
            fan_in = int(np.prod(p.data.shape[:3]))
            w = rng.standard_normal(p.data.shape) * scale * math.sqrt(2.0 / fan_in)
            p.data = w.astype(dtype)


class TestCouplingBlock:
    def test_zero_weights_are_identity(self, rng):
        block = CouplingBlock(rng, 4, 7, width=8)
        for _, p in [(n, p) for n, p in block.named_params("b") if "clamp" not in n]:
            p.data = np.zeros_like(p.data)
        x1 = ad.Tensor(rng.standard_normal((6, 6, 4)))
        x2 = ad.Tensor(rng.standard_normal((6, 6, 7)))
        y1, y2 = block.forward(x1, x2)
        assert np.array_equal(y1.data, x1.data)
        assert np.array_equal(y2.data, x2.data)

    def test_inverse_of_forward_is_identity(self, rng):
        block = CouplingBlock(rng, 4, 7, width=8)
        randomize(block.named_params("b"), rng, dtype=np.float32)
        x1 = ad.Tensor(rng.standard_normal((8, 8, 4)).astype(np.float32))
        x2 = ad.Tensor(rng.standard_normal((8, 8, 7)).astype(np.float32))
        with ad.no_grad():
            y1, y2 = block.forward(x1, x2)
            r1, r2 = block.inverse(y1, y2)
        err = max(np.abs(r1.data - x1.data).max(), np.abs(r2.data - x2.data).max())
        assert err < 1e-5

    def test_log_scale_bounded_by_clamp(self, rng):
        block = CouplingBlock(rng, 4, 7, width=8)
        randomize(block.named_params("b"), rng, scale=1.0)
        y1 = ad.Tensor(rng.standard_normal((8, 8, 4)) * 3)
        with ad.no_grad():
            log_scale = block._log_scale(y1)
        assert np.all(np.abs(log_scale.data) <= np.abs(block.clamp.data) + 1e-12)

    def test_zero_input_zero_weights_fixed_point(self, rng):
        block = CouplingBlock(rng, 4, 7, width=8)
        z1 = ad.Tensor(np.zeros((6, 6, 4)))
        z2 = ad.Tensor(np.zeros((6, 6, 7)))
        x1, x2 = block.inverse(z1, z2)
        assert np.abs(x1.data).max() == 0.0 and np.abs(x2.data).max() == 0.0


class TestNetwork:
    def test_eight_block_round_trip_f32(self, rng):
        net = InvertibleHidingNetwork(rng, 12, 29, n_blocks=8, width=16)
        randomize(net.named_params(), rng, dtype=np.float32)
        x1 = ad.Tensor(rng.standard_normal((16, 16, 12)).astype(np.float32))
        x2 = ad.Tensor(rng.standard_normal((16, 16, 29)).astype(np.float32))
        with ad.no_grad():
            y1, y2 = net.hide(x1, x2)
            r1, r2 = net.reveal(y1, y2)
        err = max(np.abs(r1.data - x1.data).max(), np.abs(r2.data - x2.data).max())
        assert err < 1e-4

    def test_eight_block_round_trip_f64(self, rng):
        net = InvertibleHidingNetwork(rng, 12, 29, n_blocks=8, width=16)
        randomize(net.named_params(), rng)
        x1 = ad.Tensor(rng.standard_normal((16, 16, 12)))
        x2 = ad.Tensor(rng.standard_normal((16, 16, 29)))
        with ad.no_grad():
            y1, y2 = net.hide(x1, x2)
            r1, r2 = net.reveal(y1, y2)
        err = max(np.abs(r1.data - x1.data).max(), np.abs(r2.data - x2.data).max())
        assert err < 1e-10

    def test_untrained_network_is_identity(self, rng):
        """Zero-init subnet tails make hide a no-op at initialization."""
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=5, width=8)
        x1 = ad.Tensor(rng.standard_normal((8, 8, 4)))
        x2 = ad.Tensor(rng.standard_normal((8, 8, 9)))
        with ad.no_grad():
            y1, y2 = net.hide(x1, x2)
        assert np.array_equal(y1.data, x1.data)
        assert np.array_equal(y2.data, x2.data)

    def test_shapes_preserved(self, rng):
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=2, width=8)
        x1 = ad.Tensor(rng.standard_normal((10, 6, 4)))
        x2 = ad.Tensor(rng.standard_normal((10, 6, 9)))
        y1, y2 = net.hide(x1, x2)
        assert y1.data.shape == (10, 6, 4) and y2.data.shape == (10, 6, 9)

    def test_deterministic(self, rng):
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=2, width=8)
        randomize(net.named_params(), rng)
        x1 = ad.Tensor(rng.standard_normal((8, 8, 4)))
        x2 = ad.Tensor(rng.standard_normal((8, 8, 9)))
        with ad.no_grad():
            a = net.hide(x1, x2)
            b = net.hide(x1, x2)
        assert np.array_equal(a[0].data, b[0].data)
        assert np.array_equal(a[1].data, b[1].data)

    def test_channel_mismatch_rejected(self, rng):
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=1, width=8)
        with pytest.raises(ad.ShapeError, match="channels"):
            net.hide(ad.Tensor(np.zeros((8, 8, 4))), ad.Tensor(np.zeros((8, 8, 8))))

    def test_spatial_mismatch_rejected(self, rng):
        net = InvertibleHidingNetwork(rng, 4, 9, n_blocks=1, width=8)
        with pytest.raises(ad.ShapeError, match="spatial"):
            net.hide(ad.Tensor(np.zeros((8, 8, 4))), ad.Tensor(np.zeros((8, 6, 9))))


class TestSampleAux:
    def test_zeros_mode(self):
        aux = sample_aux((4, 4, 3), "zeros")
        assert aux.shape == (4, 4, 3) and np.abs(aux).max() == 0.0

    def test_gaussian_is_seed_deterministic(self):
        a = sample_aux((8, 8, 2), "gaussian", seed=7)
        b = sample_aux((8, 8, 2), "gaussian", seed=7)
        assert np.array_equal(a, b)
        c = sample_aux((8, 8, 2), "gaussian", seed=8)
        assert not np.array_equal(a, c)

    def test_gaussian_mean_concentrates(self):
        draw = sample_aux((1000, 1000, 1), "gaussian", seed=3)
        assert abs(draw.mean()) < 0.01

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            sample_aux((2, 2, 1), "uniform")
