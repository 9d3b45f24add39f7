import numpy as np
import pytest

from splatforge.rasterizer import composite_ray


class TestCompositeRay:
    def test_single_splat(self):
        rgb, trans, n = composite_ray([[1.0, 0, 0]], [0.8])
        np.testing.assert_allclose(rgb, [0.8, 0, 0])
        assert abs(trans - 0.2) < 1e-15
        assert n == 1

    def test_two_half_opacity_whites(self):
        rgb, trans, n = composite_ray([[1, 1, 1], [1, 1, 1]], [0.5, 0.5])
        np.testing.assert_allclose(rgb, 0.75)
        assert abs(trans - 0.25) < 1e-15

    def test_matches_naive_double_loop(self, rng):
        colors = rng.random((20, 3))
        sigmas = rng.uniform(0, 0.95, 20)
        rgb, trans, _ = composite_ray(colors, sigmas)
        expected = np.zeros(3)
        for i in range(20):
            prefix = 1.0
            for j in range(i):
                prefix *= 1.0 - sigmas[j]
            expected += colors[i] * sigmas[i] * prefix
        np.testing.assert_allclose(rgb, expected, atol=1e-7)
        np.testing.assert_allclose(trans, np.prod(1.0 - sigmas), atol=1e-12)

    def test_sigma_clamped_at_099(self):
        rgb, trans, _ = composite_ray([[1, 1, 1]], [1.0])
        np.testing.assert_allclose(rgb, 0.99)
        assert abs(trans - 0.01) < 1e-15

    def test_early_termination_flagged(self):
        colors = np.ones((10, 3))
        sigmas = np.full(10, 0.99)
        rgb, trans, n = composite_ray(colors, sigmas, stop_transmittance=1e-3)
        assert n == 2  # T: 1 -> 0.01 -> 1e-4, stops before the third
        assert trans < 1e-3

    def test_partition_of_unity(self, rng):
        sigmas = rng.uniform(0, 0.99, 50)
        rgb, trans, _ = composite_ray(np.ones((50, 3)), sigmas)
        np.testing.assert_allclose(rgb + trans, 1.0, atol=1e-12)

    def test_sorted_contract_checked(self):
        with pytest.raises(AssertionError):
            composite_ray(np.ones((2, 3)), [0.5, 0.5], depths=[2.0, 1.0])
