"""Model adapters behind the service endpoints.

The synthetic implementations are fully deterministic per (request, seed) and
exercise every wire contract: classifier-free guidance combination at the
requested scale, both return modes, and the two prior branches. Real
checkpoint-backed adapters plug in through the same two entry points; ids
that are not synthetic/* raise ModelUnavailable until such an adapter is
installed, which the app surfaces as 503.
"""

from __future__ import annotations

import numpy as np

from splatforge_server.meshes import bumpy_asset, hash_prompt, mesh_to_ply_bytes, posed_body


class ModelUnavailable(Exception):
    pass


class SyntheticNoiseModel:
    """Seeded stand-in for a latent diffusion noise predictor.

    Unconditional prediction is seeded unit noise; the conditional branch adds
    a prompt-derived pull of the images toward a prompt color. The two are
    combined with classifier-free guidance at the requested scale, and
    pixel_gradient mode returns the conditional pull alone (the quantity a
    latent server would map through its encoder).
    """

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = device

    def predict(self, images: np.ndarray, prompt: str, t_fraction: float,
                guidance_scale: float, seed: int, mode: str) -> np.ndarray:
        rng = np.random.default_rng((int(seed) & 0x7FFFFFFFFFFFFFFF,
                                     hash_prompt(prompt)))
        eps_uncond = rng.standard_normal(images.shape)
        prompt_rng = np.random.default_rng(hash_prompt(prompt))
        prompt_color = prompt_rng.random(3)
        pull = 0.1 * (images - prompt_color)
        if mode == "pixel_gradient":
            return pull.astype(np.float32)
        eps_cond = eps_uncond + pull
        out = eps_uncond + guidance_scale * (eps_cond - eps_uncond)
        return out.astype(np.float32)


class SyntheticPriorModel:
    """Procedural 3D prior: colored blobby asset or untextured posed body."""

    def __init__(self, model_id: str, device: str = "cpu"):
        self.model_id = model_id
        self.device = device

    def generate(self, prompt: str, branch: str, seed: int) -> tuple[bytes, bool]:
        if branch == "text-to-motion":
            vertices, faces = posed_body(seed)
            return mesh_to_ply_bytes(vertices, faces, None), False
        vertices, colors, faces = bumpy_asset(prompt, seed)
        return mesh_to_ply_bytes(vertices, faces, colors), True


def load_noise_model(model_id: str, device: str):
    if model_id.startswith("synthetic/"):
        return SyntheticNoiseModel(model_id, device)
    raise ModelUnavailable(
        f"no adapter installed for 2D model {model_id!r}; "
        "synthetic/* ids run without checkpoints")


def load_prior_model(model_id: str, device: str):
    if model_id.startswith("synthetic/"):
        return SyntheticPriorModel(model_id, device)
    raise ModelUnavailable(
        f"no adapter installed for 3D model {model_id!r}; "
        "synthetic/* ids run without checkpoints")
