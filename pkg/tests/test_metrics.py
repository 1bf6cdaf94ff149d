import csv

import numpy as np
import pytest

from ardis import metrics


class TestPsnr:
    def test_identical_images_cap_at_100(self, rng):
        x = rng.random((16, 16, 3))
        assert metrics.psnr(x, x) == 100.0

    def test_known_mse_values(self):
        a = np.zeros((10, 10, 1))
        assert metrics.psnr(a, np.full_like(a, 0.1)) == pytest.approx(20.0)   # mse 0.01
        assert metrics.psnr(a, np.full_like(a, 0.01)) == pytest.approx(40.0)  # mse 1e-4

    def test_strictly_decreasing_in_mse(self, rng):
        a = rng.random((12, 12, 3))
        vals = [metrics.psnr(a, np.clip(a + eps, 0, 1)) for eps in (0.01, 0.02, 0.05, 0.2)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_invariant_under_joint_permutation(self, rng):
        a, b = rng.random((8, 8, 1)), rng.random((8, 8, 1))
        perm = rng.permutation(64)
        pa = a.reshape(-1)[perm].reshape(8, 8, 1)
        pb = b.reshape(-1)[perm].reshape(8, 8, 1)
        assert metrics.psnr(a, b) == pytest.approx(metrics.psnr(pa, pb))

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            metrics.psnr(rng.random((8, 8, 3)), rng.random((8, 9, 3)))


class TestSsim:
    def test_self_similarity_is_one(self, rng):
        x = rng.random((20, 20, 3))
        assert metrics.ssim(x, x) == pytest.approx(1.0)

    def test_symmetry(self, rng):
        a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
        assert metrics.ssim(a, b) == pytest.approx(metrics.ssim(b, a), abs=1e-12)

    def test_inverted_checkerboard_scores_low(self):
        x = (np.indices((16, 16)).sum(axis=0) % 2).astype(np.float64)[:, :, None]
        assert metrics.ssim(x, 1.0 - x) < 0.5

    def test_constants_reduce_to_luminance_term(self):
        """For flat images the variance terms vanish and SSIM equals
        (2ab + C1) / (a^2 + b^2 + C1)."""
        a, b = 0.75, 0.25
        expected = (2 * a * b + 0.01 ** 2) / (a * a + b * b + 0.01 ** 2)
        got = metrics.ssim(np.full((16, 16, 1), a), np.full((16, 16, 1), b))
        assert got == pytest.approx(expected, abs=1e-9)

    def test_image_smaller_than_window_rejected(self, rng):
        with pytest.raises(ValueError, match="window"):
            metrics.ssim(rng.random((8, 8, 1)), rng.random((8, 8, 1)))


class TestRre:
    def test_exact_prediction_is_zero(self):
        assert metrics.rre((256, 256), (256, 256)) == 0.0

    def test_half_resolution_is_fifty_percent(self):
        assert metrics.rre((256, 256), (512, 512)) == pytest.approx(50.0)

    def test_mean_over_fixed_decoder_baseline(self):
        """A decoder locked to 256x256 against {512, 720, 1024} squares
        averages 63.15%, matching the reference 63.12 within rounding."""
        vals = [metrics.rre((256, 256), (t, t)) for t in (512, 720, 1024)]
        assert np.mean(vals) == pytest.approx(63.15, abs=0.01)
        assert abs(np.mean(vals) - 63.12) < 0.1

    def test_symmetric_between_axes(self):
        assert metrics.rre((100, 200), (200, 200)) == pytest.approx(
            metrics.rre((200, 100), (200, 200)))

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            metrics.rre((10, 10), (0, 10))


class TestReport:
    def _rows(self):
        return [
            metrics.MetricRow("a.png", 40.0, 0.99, 30.0, 0.9, 0.0),
            metrics.MetricRow("b.png", 42.0, 0.97, 28.0, 0.8, 50.0),
        ]

    def test_aggregate_is_columnwise_mean(self):
        agg = metrics.aggregate(self._rows())
        assert agg.id == "mean"
        assert agg.stego_psnr == pytest.approx(41.0)
        assert agg.rre_percent == pytest.approx(25.0)

    def test_csv_schema_and_aggregate_row(self, tmp_path):
        path = tmp_path / "report.csv"
        metrics.write_report(path, self._rows())
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["id", "stego_psnr", "stego_ssim",
                           "secret_psnr", "secret_ssim", "rre_percent"]
        assert len(rows) == 4 and rows[-1][0] == "mean"
        assert float(rows[-1][1]) == pytest.approx(41.0)
