"""Diffusion noise schedule and timestep sampling.

The schedule mirrors the scaled-linear variance schedule of the 2.1-base
latent diffusion family: beta_i = linspace(sqrt(b0), sqrt(b1), T)^2 with
alpha_bar the cumulative product of (1 - beta). Timesteps are addressed by
fraction t in (0, 1); training samples them uniformly from (0.02, 0.98)
for the first 500 iterations and (0.02, 0.55) afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from splatforge.errors import ContractViolationError, InvalidParameterError

PHASE_SWITCH_ITERATION = 500
T_RANGE_EARLY = (0.02, 0.98)
T_RANGE_LATE = (0.02, 0.55)


@dataclass
class NoiseSchedule:
    num_train_steps: int = 1000
    beta_start: float = 0.00085
    beta_end: float = 0.012
    alpha_bar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.num_train_steps < 2:
            raise InvalidParameterError("num_train_steps must be >= 2")
        if not (0.0 < self.beta_start < self.beta_end < 1.0):
            raise InvalidParameterError("need 0 < beta_start < beta_end < 1")
        betas = np.linspace(np.sqrt(self.beta_start), np.sqrt(self.beta_end),
                            self.num_train_steps, dtype=np.float64) ** 2
        self.alpha_bar = np.cumprod(1.0 - betas)

    def step_index(self, t: float) -> int:
        if not (0.0 < t < 1.0):
            raise InvalidParameterError(f"t fraction must lie in (0, 1), got {t}")
        return int(round(t * (self.num_train_steps - 1)))

    def alpha_bar_at(self, t: float) -> float:
        return float(self.alpha_bar[self.step_index(t)])

    def weight_at(self, t: float, mode: str = "one_minus_alpha_bar") -> float:
        """SDS weighting w(t); 'uniform' gives the constant-1 alternative."""
        if mode == "one_minus_alpha_bar":
            return 1.0 - self.alpha_bar_at(t)
        if mode == "uniform":
            return 1.0
        raise InvalidParameterError(f"unknown weight mode {mode!r}")


def sample_timestep(iteration: int, rng: np.random.Generator) -> float:
    """Two-phase uniform timestep fraction for a training iteration."""
    if iteration < 0:
        raise InvalidParameterError("iteration must be >= 0")
    lo, hi = T_RANGE_EARLY if iteration < PHASE_SWITCH_ITERATION else T_RANGE_LATE
    return float(rng.uniform(lo, hi))


def add_noise(x: np.ndarray, t: float, epsilon: np.ndarray,
              schedule: NoiseSchedule) -> np.ndarray:
    """Forward-noised image z_t = sqrt(a_bar) x + sqrt(1 - a_bar) eps."""
    x = np.asarray(x, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if x.shape != epsilon.shape:
        raise ContractViolationError(
            f"image shape {x.shape} and noise shape {epsilon.shape} differ")
    a = schedule.alpha_bar_at(t)
    return np.sqrt(a) * x + np.sqrt(1.0 - a) * epsilon
