"""FastAPI application exposing the guidance wire protocol.

POST /v1/predict_noise  {prompt, t_fraction, guidance_scale, seed, images,
                         shape, return} -> {shape, data, return}
POST /v1/generate_prior {prompt, branch, seed} -> {ply, colors_present}
GET  /v1/health         -> {status, model_2d, model_3d}

Arrays travel as base64 little-endian float32. Model access is serialized by
a lock: concurrent clients queue FIFO.
"""

from __future__ import annotations

import base64
import binascii
import threading

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from splatforge_server.config import ServerConfig
from splatforge_server.models import ModelUnavailable, load_noise_model, load_prior_model


class PredictNoiseRequest(BaseModel):
    prompt: str = ""
    t_fraction: float = Field(gt=0.0, lt=1.0)
    guidance_scale: float = 100.0
    seed: int = 0
    images: str
    shape: list[int]
    return_mode: str = Field(default="epsilon_hat", alias="return")

    model_config = {"populate_by_name": True}


class GeneratePriorRequest(BaseModel):
    prompt: str
    branch: str = "text-to-3d"
    seed: int = 0
    format: str = "ply"


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig.from_env()
    app = FastAPI(title="splatforge guidance service")
    lock = threading.Lock()

    state = {"noise": None, "prior": None, "noise_err": None, "prior_err": None}
    try:
        state["noise"] = load_noise_model(config.model_2d, config.device)
    except ModelUnavailable as exc:
        state["noise_err"] = str(exc)
    try:
        state["prior"] = load_prior_model(config.model_3d, config.device)
    except ModelUnavailable as exc:
        state["prior_err"] = str(exc)

    @app.get("/v1/health")
    def health():
        ok = state["noise"] is not None and state["prior"] is not None
        return {
            "status": "ok" if ok else "degraded",
            "model_2d": config.model_2d if state["noise"] else None,
            "model_3d": config.model_3d if state["prior"] else None,
        }

    @app.post("/v1/predict_noise")
    def predict_noise(req: PredictNoiseRequest):
        if state["noise"] is None:
            raise HTTPException(503, state["noise_err"] or "2D model not loaded")
        if req.return_mode not in ("epsilon_hat", "pixel_gradient"):
            raise HTTPException(400, f"unknown return mode {req.return_mode!r}")
        shape = tuple(req.shape)
        if len(shape) != 4 or shape[-1] != 3 or any(s < 1 for s in shape):
            raise HTTPException(400, f"images shape must be (B, H, W, 3), got {list(shape)}")
        if shape[0] > config.max_batch:
            raise HTTPException(413, f"batch {shape[0]} exceeds max_batch {config.max_batch}")
        try:
            raw = base64.b64decode(req.images, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise HTTPException(400, f"images field is not valid base64: {exc}") from exc
        expected = int(np.prod(shape)) * 4
        if len(raw) != expected:
            raise HTTPException(
                400, f"payload length {len(raw)} does not match shape (expected {expected})")
        images = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        with lock:
            out = state["noise"].predict(images, req.prompt, req.t_fraction,
                                         req.guidance_scale, req.seed, req.return_mode)
        return {
            "shape": list(out.shape),
            "data": base64.b64encode(np.ascontiguousarray(out, "<f4").tobytes()).decode(),
            "return": req.return_mode,
        }

    @app.post("/v1/generate_prior")
    def generate_prior(req: GeneratePriorRequest):
        if state["prior"] is None:
            raise HTTPException(503, state["prior_err"] or "3D model not loaded")
        if not req.prompt.strip():
            raise HTTPException(422, "prompt must be non-empty")
        if req.branch not in ("text-to-3d", "text-to-motion"):
            raise HTTPException(400, f"unknown branch {req.branch!r}")
        if req.format != "ply":
            raise HTTPException(400, f"unsupported format {req.format!r}")
        with lock:
            ply, colors_present = state["prior"].generate(req.prompt, req.branch, req.seed)
        return {
            "ply": base64.b64encode(ply).decode(),
            "colors_present": colors_present,
        }

    return app
