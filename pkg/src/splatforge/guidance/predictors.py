"""Noise predictors: the deterministic photometric mock and the remote client.

Both expose predict(request, z_t, epsilon) -> epsilon_hat with the same shape
as the request images. The training loop never differentiates through a
predictor; it only evaluates it.
"""

from __future__ import annotations

import os
import time

import numpy as np
import requests

from splatforge.core.types import Camera
from splatforge.errors import GuidanceFailureError, MissingTargetError, ServiceError
from splatforge.guidance.protocol import decode_array, predict_noise_body
from splatforge.guidance.sds import GuidanceRequest

GUIDANCE_URL_ENV = "SPLATFORGE_GUIDANCE_URL"


def camera_key(camera: Camera) -> tuple:
    """Hashable identity for target lookup; pose rounded to 1e-6 degrees/units."""
    return (round(float(camera.radius), 6), round(float(camera.azimuth), 6),
            round(float(camera.elevation), 6), camera.width, camera.height)


class MockNoisePredictor:
    """eps_hat = eps + strength * (x - x_target) for registered target views.

    The SDS update direction then becomes w(t) * strength * (x - x_target),
    a photometric pull toward the per-view targets; x = x_target is the exact
    fixed point (eps_hat == eps).
    """

    def __init__(self, strength: float = 1.0):
        self.strength = float(strength)
        self._targets: dict[tuple, np.ndarray] = {}

    def register_target(self, camera: Camera, image: np.ndarray):
        self._targets[camera_key(camera)] = np.asarray(image, dtype=np.float64)

    def target_for(self, camera: Camera) -> np.ndarray:
        key = camera_key(camera)
        if key not in self._targets:
            raise MissingTargetError(f"no target registered for camera {key}")
        return self._targets[key]

    @property
    def cameras(self) -> list[tuple]:
        return list(self._targets)

    def predict(self, request: GuidanceRequest, z_t, epsilon) -> np.ndarray:
        epsilon = np.asarray(epsilon, dtype=np.float64)
        if len(request.camera_keys) != request.batch_size:
            raise MissingTargetError("mock predictor needs one camera key per batch image")
        out = np.empty_like(epsilon)
        for b, key in enumerate(request.camera_keys):
            if key not in self._targets:
                raise MissingTargetError(f"no target registered for camera {key}")
            target = self._targets[key]
            if target.shape != request.images[b].shape:
                raise GuidanceFailureError(
                    f"target shape {target.shape} does not match render {request.images[b].shape}")
            out[b] = epsilon[b] + self.strength * (request.images[b] - target)
        return out


class RemoteNoisePredictor:
    """HTTP client for the guidance service, with retry and health probing.

    return_mode="pixel_gradient" asks the server for the encoder-mapped
    gradient; the client folds it back into epsilon_hat = epsilon + gradient
    so downstream SDS assembly is identical for both modes.
    """

    def __init__(self, endpoint: str | None = None, return_mode: str = "epsilon_hat",
                 timeout: float = 120.0, max_attempts: int = 3, backoff: float = 1.0,
                 session=None):
        endpoint = endpoint or os.environ.get(GUIDANCE_URL_ENV, "")
        if not endpoint:
            raise ServiceError(
                f"no guidance endpoint configured (flag --guidance-url or ${GUIDANCE_URL_ENV})")
        if return_mode not in ("epsilon_hat", "pixel_gradient"):
            raise ServiceError(f"unknown return mode {return_mode!r}")
        self.endpoint = endpoint.rstrip("/")
        self.return_mode = return_mode
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._http = session or requests.Session()

    def health(self) -> dict:
        try:
            resp = self._http.get(f"{self.endpoint}/v1/health", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise ServiceError(f"guidance health probe failed: {exc}") from exc

    def predict(self, request: GuidanceRequest, z_t, epsilon) -> np.ndarray:
        body = predict_noise_body(request, self.return_mode)
        payload = self._post_with_retry("/v1/predict_noise", body)
        arr = decode_array(payload.get("data", ""), payload.get("shape", ()))
        if arr.shape != request.images.shape:
            raise GuidanceFailureError(
                f"service returned shape {arr.shape}, expected {request.images.shape}")
        if payload.get("return", self.return_mode) == "pixel_gradient":
            return np.asarray(epsilon, dtype=np.float64) + arr
        return arr

    def _post_with_retry(self, path: str, body: dict) -> dict:
        last_exc = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._http.post(f"{self.endpoint}{path}", json=body,
                                       timeout=self.timeout)
                if resp.status_code >= 500:
                    last_exc = ServiceError(f"server error {resp.status_code}")
                    continue
                if resp.status_code >= 400:
                    raise GuidanceFailureError(
                        f"guidance request rejected ({resp.status_code}): {resp.text[:200]}")
                try:
                    return resp.json()
                except ValueError as exc:
                    last_exc = ServiceError(f"malformed JSON response: {exc}")
                    continue
            except requests.RequestException as exc:
                last_exc = ServiceError(f"guidance request failed: {exc}")
        raise GuidanceFailureError(
            f"guidance unavailable after {self.max_attempts} attempts: {last_exc}")
