import numpy as np
import pytest

from splatforge.core.activations import covariance_from_scale_rotation
from splatforge.core.types import Camera
from splatforge.errors import InvalidParameterError
from splatforge.rasterizer import gaussian_weight, project_cloud, project_gaussian
from splatforge.rasterizer.common import COV2D_LOWPASS

from conftest import random_cloud


class TestGaussianWeight:
    def test_center_is_one(self, rng):
        cov = covariance_from_scale_rotation(rng.uniform(0.5, 2, 3), rng.normal(size=4))
        assert gaussian_weight(np.zeros(3), cov) == 1.0

    def test_mahalanobis_two_gives_inv_e(self):
        cov = np.eye(2) * 4.0
        offset = np.array([2.0 * np.sqrt(2.0), 0.0])  # x^T S^-1 x = 2
        assert abs(gaussian_weight(offset, cov) - np.exp(-1.0)) < 1e-12

    def test_matches_dense_inverse(self, rng):
        for _ in range(50):
            a = rng.normal(size=(3, 3))
            cov = a @ a.T + 0.1 * np.eye(3)
            x = rng.normal(size=3)
            expected = np.exp(-0.5 * x @ np.linalg.inv(cov) @ x)
            assert abs(gaussian_weight(x, cov) - expected) < 1e-6

    def test_singular_regularized_not_raised(self):
        w = gaussian_weight(np.array([1.0, 0.0]), np.zeros((2, 2)))
        assert 0.0 < w <= 1.0
        # exp(-0.5 * 1/0.3) once regularized to 0.3 * I
        assert abs(w - np.exp(-0.5 / COV2D_LOWPASS)) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidParameterError):
            gaussian_weight(np.array([np.nan, 0.0]), np.eye(2))


class TestProjectGaussian:
    def test_on_axis_projects_to_image_center(self, rng):
        for _ in range(10):
            cam = Camera(radius=rng.uniform(1.5, 4), azimuth=rng.uniform(-180, 180),
                         elevation=rng.uniform(-10, 60), width=64, height=48)
            splat = project_gaussian(cam, np.zeros(3), 1e-4 * np.eye(3),
                                     np.full(3, 0.5), 0.5)
            assert splat is not None
            assert abs(splat.mean2d[0] - 32.0) <= 0.5
            assert abs(splat.mean2d[1] - 24.0) <= 0.5
            assert abs(splat.depth - cam.radius) < 1e-9

    def test_pinhole_covariance_scaling(self):
        cam = Camera(radius=2.0, azimuth=0.0, elevation=0.0, width=128, height=128)
        s = 0.05
        splat = project_gaussian(cam, np.zeros(3), s**2 * np.eye(3), np.full(3, 0.5), 0.5)
        f = cam.focal_px
        expected = (f * s / cam.radius) ** 2
        measured = splat.cov2d - COV2D_LOWPASS * np.eye(2)
        np.testing.assert_allclose(np.diag(measured), expected, rtol=1e-6)
        assert abs(measured[0, 1]) < 1e-9

    def test_behind_camera_culled(self):
        cam = Camera(radius=2.0, azimuth=0.0, elevation=0.0, width=64, height=64)
        eye = cam.eye
        behind = eye + (eye - cam.look_at)  # on the far side of the eye
        assert project_gaussian(cam, behind, 1e-4 * np.eye(3), np.full(3, 0.5), 0.5) is None

    def test_offscreen_support_culled(self):
        cam = Camera(radius=2.0, azimuth=0.0, elevation=0.0, width=64, height=64)
        # far off the optical axis but still in front: 3-sigma extent misses
        splat = project_gaussian(cam, np.array([0.0, 50.0, 0.0]),
                                 1e-6 * np.eye(3), np.full(3, 0.5), 0.5)
        assert splat is None


class TestProjectCloud:
    def test_sorted_by_depth(self, rng):
        cloud = random_cloud(rng, 200)
        cam = Camera(radius=2.5, azimuth=30, elevation=10, width=64, height=64)
        proj = project_cloud(cloud, cam)
        assert (np.diff(proj.depths) >= 0).all()

    def test_rects_bound_support(self, rng):
        cloud = random_cloud(rng, 100)
        cam = Camera(radius=2.5, azimuth=-45, elevation=25, width=64, height=64)
        proj = project_cloud(cloud, cam)
        assert (proj.rects[:, 0] >= 0).all() and (proj.rects[:, 1] >= 0).all()
        assert (proj.rects[:, 2] <= 64).all() and (proj.rects[:, 3] <= 64).all()
        assert (proj.rects[:, 2] > proj.rects[:, 0]).all()
        assert (proj.rects[:, 3] > proj.rects[:, 1]).all()

    def test_splat_view_matches_single_projection(self, rng):
        cloud = random_cloud(rng, 20)
        cam = Camera(radius=2.5, azimuth=10, elevation=5, width=64, height=64)
        proj = project_cloud(cloud, cam)
        from splatforge.core.activations import activate_params
        alpha, scales, quats, rgb = activate_params(cloud)
        for i in range(proj.num_splats):
            src = proj.source_index[i]
            single = project_gaussian(
                cam, cloud.positions[src],
                covariance_from_scale_rotation(scales[src], quats[src]),
                rgb[src], alpha[src])
            got = proj.splat(i)
            np.testing.assert_allclose(got.mean2d, single.mean2d, rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(got.cov2d, single.cov2d, rtol=1e-7, atol=1e-10)
            assert abs(got.depth - single.depth) < 1e-9
