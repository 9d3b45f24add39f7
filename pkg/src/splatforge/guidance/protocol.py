"""Wire protocol helpers for the guidance service (JSON over HTTP).

POST /v1/predict_noise
  body: {prompt, t_fraction, guidance_scale, seed,
         images: base64 little-endian float32 of shape B*H*W*3,
         shape: [B, H, W, 3], return: "epsilon_hat" | "pixel_gradient"}
  response: {shape: [...], data: base64 float32, return: <mode>}
GET /v1/health
  response: {status, model_2d, model_3d}
POST /v1/generate_prior
  body: {prompt, branch: "text-to-3d" | "text-to-motion", seed, format: "ply"}
  response: {ply: base64, colors_present: bool}

In "pixel_gradient" mode the server returns (eps_hat - eps) already mapped
through its encoder to RGB pixel space, without the w(t) factor; the client
applies w(t). Arrays travel as little-endian float32.
"""

from __future__ import annotations

import base64

import numpy as np

from splatforge.errors import ServiceError


def encode_array(arr: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def decode_array(data: str, shape) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise ServiceError(f"response payload is not valid base64: {exc}") from exc
    shape = tuple(int(s) for s in shape)
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ServiceError(
            f"payload length {len(raw)} does not match shape {shape} ({expected} bytes)")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)


def predict_noise_body(request, return_mode: str = "epsilon_hat") -> dict:
    return {
        "prompt": request.prompt,
        "t_fraction": request.t,
        "guidance_scale": request.guidance_scale,
        "seed": request.seed,
        "images": encode_array(request.images),
        "shape": list(request.images.shape),
        "return": return_mode,
    }
