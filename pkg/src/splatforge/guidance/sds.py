"""Score-distillation gradient assembly.

The predictor is treated as a constant: the per-pixel image gradient is
w(t) * (eps_hat - eps) with no derivative flowing into the predictor. That
factor then chains through the renderer Jacobian via render_backward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from splatforge.errors import ContractViolationError, GuidanceFailureError


@dataclass
class GuidanceRequest:
    """One predictor invocation for a batch of rendered views."""

    images: np.ndarray        # (B, H, W, 3) rendered batch in [0, 1]
    prompt: str
    t: float                  # timestep fraction in (0, 1)
    guidance_scale: float = 100.0
    seed: int = 0
    camera_keys: tuple = field(default_factory=tuple)  # used by the mock

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        if self.images.ndim != 4 or self.images.shape[-1] != 3:
            raise ContractViolationError(
                f"images must be (B, H, W, 3), got {self.images.shape}")
        if self.images.shape[0] < 1:
            raise ContractViolationError("batch must contain at least one image")
        if self.images.size and (self.images.min() < -1e-6
                                 or self.images.max() > 1.0 + 1e-6):
            raise ContractViolationError("images must lie in [0, 1]")
        if not (0.0 < self.t < 1.0):
            raise ContractViolationError(f"t fraction must lie in (0, 1), got {self.t}")

    @property
    def batch_size(self) -> int:
        return self.images.shape[0]


def sds_gradient(epsilon_hat: np.ndarray, epsilon: np.ndarray, w_t: float) -> np.ndarray:
    """Per-pixel image gradient w_t * (eps_hat - eps).

    Non-finite predictor output raises GuidanceFailureError so the caller can
    skip the iteration.
    """
    epsilon_hat = np.asarray(epsilon_hat, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon_hat.shape != epsilon.shape:
        raise ContractViolationError(
            f"epsilon_hat {epsilon_hat.shape} and epsilon {epsilon.shape} differ")
    if not np.isfinite(epsilon_hat).all():
        raise GuidanceFailureError("predictor returned non-finite values")
    return w_t * (epsilon_hat - epsilon)
