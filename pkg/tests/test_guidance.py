import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from splatforge.core.types import Camera
from splatforge.errors import (
    ContractViolationError,
    GuidanceFailureError,
    MissingTargetError,
    ServiceError,
)
from splatforge.guidance import (
    GuidanceRequest,
    MockNoisePredictor,
    NoiseSchedule,
    RemoteNoisePredictor,
    add_noise,
    decode_array,
    encode_array,
    sample_timestep,
    sds_gradient,
)
from splatforge.guidance.schedule import T_RANGE_EARLY, T_RANGE_LATE

DATA = Path(__file__).parent / "data"


class TestSchedule:
    def test_alpha_bar_monotone_in_unit_interval(self):
        s = NoiseSchedule()
        assert (np.diff(s.alpha_bar) < 0).all()
        assert 0.0 < s.alpha_bar[-1] < s.alpha_bar[0] < 1.0

    def test_alpha_bar_matches_recomputed_cumprod(self):
        s = NoiseSchedule(num_train_steps=1000, beta_start=0.00085, beta_end=0.012)
        betas = np.linspace(np.sqrt(0.00085), np.sqrt(0.012), 1000) ** 2
        manual = 1.0
        idx = s.step_index(0.5)
        for i in range(idx + 1):
            manual *= 1.0 - betas[i]
        assert abs(s.alpha_bar_at(0.5) - manual) < 1e-12

    def test_phase_ranges(self):
        rng = np.random.default_rng(1)
        early = np.array([sample_timestep(0, rng) for _ in range(10_000)])
        assert early.min() >= T_RANGE_EARLY[0] and early.max() <= T_RANGE_EARLY[1]
        assert abs(early.mean() - 0.5) < 0.01
        late = np.array([sample_timestep(500, rng) for _ in range(10_000)])
        assert late.max() <= T_RANGE_LATE[1]
        assert late.min() >= T_RANGE_LATE[0]

    def test_deterministic_sequence(self):
        a = [sample_timestep(i, np.random.default_rng(5)) for i in (0, 100, 600)]
        b = [sample_timestep(i, np.random.default_rng(5)) for i in (0, 100, 600)]
        assert a == b

    def test_ks_statistic_uniform(self):
        rng = np.random.default_rng(2)
        for iteration, (lo, hi) in ((0, T_RANGE_EARLY), (700, T_RANGE_LATE)):
            draws = np.array([sample_timestep(iteration, rng) for _ in range(10_000)])
            ks = stats.kstest(draws, stats.uniform(loc=lo, scale=hi - lo).cdf)
            assert ks.statistic < 0.02


class TestAddNoise:
    def test_low_t_is_nearly_identity(self, rng):
        s = NoiseSchedule()
        x = rng.random((4, 4, 3))
        eps = rng.standard_normal((4, 4, 3))
        z = add_noise(x, 0.001, eps, s)
        a = s.alpha_bar_at(0.001)
        assert a > 0.99
        np.testing.assert_allclose(z, x, atol=5 * np.sqrt(1 - a))

    def test_zero_image_pure_noise_term(self, rng):
        s = NoiseSchedule()
        eps = rng.standard_normal((4, 4, 3))
        z = add_noise(np.zeros((4, 4, 3)), 0.5, eps, s)
        np.testing.assert_allclose(z, np.sqrt(1 - s.alpha_bar_at(0.5)) * eps, atol=1e-12)

    def test_mean_preserved_under_noise_resampling(self, rng):
        s = NoiseSchedule()
        x = rng.random((2, 2, 3))
        t = 0.5
        draws = np.stack([add_noise(x, t, rng.standard_normal(x.shape), s)
                          for _ in range(1000)])
        expected = np.sqrt(s.alpha_bar_at(t)) * x
        sem = np.sqrt(1 - s.alpha_bar_at(t)) / np.sqrt(1000)
        assert np.abs(draws.mean(axis=0) - expected).max() < 3 * sem * 3

    def test_shape_mismatch(self, rng):
        with pytest.raises(ContractViolationError):
            add_noise(np.zeros((2, 2, 3)), 0.5, np.zeros((2, 3, 3)), NoiseSchedule())


class TestSdsGradient:
    def test_fixed_point(self, rng):
        eps = rng.standard_normal((2, 4, 4, 3))
        np.testing.assert_array_equal(sds_gradient(eps, eps, 0.7), 0.0)

    def test_zero_weight(self, rng):
        a, b = rng.standard_normal((2, 8)), rng.standard_normal((2, 8))
        np.testing.assert_array_equal(sds_gradient(a, b, 0.0), 0.0)

    def test_elementwise_formula(self, rng):
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((3, 5))
        np.testing.assert_allclose(sds_gradient(a, b, 0.35), 0.35 * (a - b), atol=1e-15)

    def test_linearity_and_homogeneity(self, rng):
        e = rng.standard_normal((4, 4))
        d1, d2 = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
        g1 = sds_gradient(e + d1, e, 1.0)
        g2 = sds_gradient(e + d2, e, 1.0)
        g12 = sds_gradient(e + d1 + d2, e, 1.0)
        np.testing.assert_allclose(g12, g1 + g2, atol=1e-12)
        np.testing.assert_allclose(sds_gradient(e + d1, e, 2.5), 2.5 * g1, atol=1e-12)

    def test_nonfinite_predictor_output(self, rng):
        e = rng.standard_normal((2, 2))
        bad = e.copy()
        bad[0, 0] = np.nan
        with pytest.raises(GuidanceFailureError):
            sds_gradient(bad, e, 1.0)


def make_request(x, cams=()):
    return GuidanceRequest(images=x, prompt="test", t=0.5,
                           camera_keys=tuple(cams))


class TestMockPredictor:
    def test_fixed_point_at_target(self, rng):
        from splatforge.guidance.predictors import camera_key
        cam = Camera(radius=2.0, azimuth=0, elevation=0, width=8, height=8)
        target = rng.random((8, 8, 3))
        mock = MockNoisePredictor()
        mock.register_target(cam, target)
        eps = rng.standard_normal((1, 8, 8, 3))
        req = make_request(target[None], [camera_key(cam)])
        np.testing.assert_array_equal(mock.predict(req, None, eps), eps)

    def test_constant_offset(self, rng):
        from splatforge.guidance.predictors import camera_key
        cam = Camera(radius=2.0, azimuth=0, elevation=0, width=4, height=4)
        target = np.zeros((4, 4, 3))
        mock = MockNoisePredictor(strength=1.0)
        mock.register_target(cam, target)
        x = np.full((1, 4, 4, 3), 0.5)
        eps = rng.standard_normal((1, 4, 4, 3))
        out = mock.predict(make_request(x, [camera_key(cam)]), None, eps)
        np.testing.assert_allclose(out - eps, 0.5, atol=1e-12)

    def test_missing_target(self, rng):
        mock = MockNoisePredictor()
        x = rng.random((1, 4, 4, 3))
        with pytest.raises(MissingTargetError):
            mock.predict(make_request(x, [("nope",)]), None,
                         rng.standard_normal((1, 4, 4, 3)))


class _FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("no json")
        return self._payload

    def raise_for_status(self):
        if self.status_code >= 400:
            import requests
            raise requests.HTTPError(f"{self.status_code}")


class _FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.posts = []

    def post(self, url, json=None, timeout=None):
        self.posts.append((url, json))
        return self.responses.pop(0)

    def get(self, url, timeout=None):
        return _FakeResponse(200, {"status": "ok", "model_2d": "m2", "model_3d": "m3"})


class TestRemotePredictor:
    def test_golden_fixture_parses_bit_exact(self, rng):
        fixture = json.loads((DATA / "predict_noise_fixture.json").read_text())
        expected = np.load(DATA / "predict_noise_expected.npy")
        session = _FakeSession([_FakeResponse(200, fixture["response"])])
        client = RemoteNoisePredictor("http://fake", session=session, backoff=0.0)
        x = decode_array(fixture["request"]["images"], fixture["request"]["shape"])
        req = GuidanceRequest(images=x, prompt=fixture["request"]["prompt"],
                              t=fixture["request"]["t_fraction"],
                              guidance_scale=fixture["request"]["guidance_scale"],
                              seed=fixture["request"]["seed"])
        out = client.predict(req, None, np.zeros_like(x))
        np.testing.assert_array_equal(out.astype("<f4"), expected)
        # request body matches the recorded one
        body = session.posts[0][1]
        assert body["images"] == fixture["request"]["images"]
        assert body["prompt"] == fixture["request"]["prompt"]

    def test_batch_shape_contract(self, rng):
        x = rng.random((4, 4, 4, 3))
        payload = {"shape": [4, 4, 4, 3], "data": encode_array(np.zeros((4, 4, 4, 3))),
                   "return": "epsilon_hat"}
        client = RemoteNoisePredictor("http://fake", backoff=0.0,
                                      session=_FakeSession([_FakeResponse(200, payload)]))
        out = client.predict(make_request(x), None, np.zeros_like(x))
        assert out.shape == (4, 4, 4, 3)

    def test_pixel_gradient_folds_into_epsilon_hat(self, rng):
        x = rng.random((1, 4, 4, 3))
        grad = rng.standard_normal((1, 4, 4, 3)).astype("<f4")
        payload = {"shape": [1, 4, 4, 3], "data": encode_array(grad),
                   "return": "pixel_gradient"}
        client = RemoteNoisePredictor("http://fake", return_mode="pixel_gradient",
                                      backoff=0.0,
                                      session=_FakeSession([_FakeResponse(200, payload)]))
        eps = rng.standard_normal((1, 4, 4, 3))
        out = client.predict(make_request(x), None, eps)
        np.testing.assert_allclose(out - eps, grad.astype(np.float64), atol=1e-12)

    def test_retry_then_success(self, rng):
        x = rng.random((1, 2, 2, 3))
        good = {"shape": [1, 2, 2, 3], "data": encode_array(np.zeros((1, 2, 2, 3))),
                "return": "epsilon_hat"}
        session = _FakeSession([_FakeResponse(503), _FakeResponse(500),
                                _FakeResponse(200, good)])
        client = RemoteNoisePredictor("http://fake", backoff=0.0, session=session)
        out = client.predict(make_request(x), None, np.zeros_like(x))
        assert out.shape == (1, 2, 2, 3)
        assert len(session.posts) == 3

    def test_exhausted_retries_raise_guidance_failure(self, rng):
        x = rng.random((1, 2, 2, 3))
        session = _FakeSession([_FakeResponse(503)] * 3)
        client = RemoteNoisePredictor("http://fake", backoff=0.0, session=session)
        with pytest.raises(GuidanceFailureError):
            client.predict(make_request(x), None, np.zeros_like(x))

    def test_health_probe(self):
        client = RemoteNoisePredictor("http://fake", session=_FakeSession([]))
        health = client.health()
        assert health["status"] == "ok"
        assert health["model_2d"] == "m2"

    def test_no_endpoint_configured(self, monkeypatch):
        monkeypatch.delenv("SPLATFORGE_GUIDANCE_URL", raising=False)
        with pytest.raises(ServiceError):
            RemoteNoisePredictor()

    def test_malformed_payload_rejected(self):
        with pytest.raises(ServiceError):
            decode_array("not-base64!!", (2, 2))
        with pytest.raises(ServiceError):
            decode_array(encode_array(np.zeros(4)), (2, 3))
