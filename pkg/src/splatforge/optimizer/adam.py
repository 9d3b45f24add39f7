"""First-order moment-based updates, one state per parameter group.

Standard bias-corrected Adam with betas (0.9, 0.999) and eps 1e-15. Groups
with non-finite gradients are skipped (counted) rather than applied; moments
live in float64, parameters are written back in their storage dtype.
"""

from __future__ import annotations

import numpy as np

from splatforge.errors import ContractViolationError


class Adam:
    def __init__(self, params: dict[str, np.ndarray], learning_rates: dict[str, float],
                 betas=(0.9, 0.999), eps: float = 1e-15):
        self.params = params
        self.learning_rates = dict(learning_rates)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.skip_counts = {name: 0 for name in params}
        self.m = {name: np.zeros(p.shape, dtype=np.float64) for name, p in params.items()}
        self.v = {name: np.zeros(p.shape, dtype=np.float64) for name, p in params.items()}

    def step(self, grads: dict[str, np.ndarray]):
        self.step_count += 1
        b1t = 1.0 - self.beta1 ** self.step_count
        b2t = 1.0 - self.beta2 ** self.step_count
        for name, param in self.params.items():
            g = grads.get(name)
            if g is None:
                continue
            g = np.asarray(g, dtype=np.float64)
            if g.shape != param.shape:
                raise ContractViolationError(
                    f"gradient shape {g.shape} != parameter shape {param.shape} for {name!r}")
            if not np.isfinite(g).all():
                self.skip_counts[name] += 1
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (self.learning_rates[name] / b1t) * m / (np.sqrt(v / b2t) + self.eps)
            param -= update.astype(param.dtype)

    def state_dict(self) -> dict:
        return {
            "step_count": self.step_count,
            "skip_counts": dict(self.skip_counts),
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict):
        self.step_count = int(state["step_count"])
        self.skip_counts = dict(state["skip_counts"])
        for name in self.params:
            self.m[name][...] = state["m"][name]
            self.v[name][...] = state["v"][name]
