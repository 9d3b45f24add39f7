"""Compositing backend selection.

The compiled extension is preferred; the numpy fallback keeps the package
functional without it. SPLATFORGE_BACKEND={compiled,python} forces a choice
(raising if the compiled extension is requested but missing).
"""

from __future__ import annotations

import os

import numpy as np

from splatforge.errors import ConfigError
from splatforge.rasterizer.common import (
    CUTOFF_D2,
    SIGMA_CLAMP,
    TAPER_START_D2,
    TILE_SIZE,
)

try:
    from splatforge.rasterizer import _kernels
except ImportError:  # pragma: no cover - exercised via SPLATFORGE_BACKEND=python
    _kernels = None

from splatforge.rasterizer import py_kernels


class CompiledBackend:
    name = "compiled"

    def forward(self, proj, stop_t, num_threads):
        offsets, entries = _kernels.bin_splats(proj.rects, proj.width, proj.height, TILE_SIZE)
        rgb, trans, ncontrib, last = _kernels.forward(
            proj.means2d, proj.conics, proj.colors, proj.alphas, proj.rects,
            offsets, entries, proj.height, proj.width, TILE_SIZE,
            stop_t, CUTOFF_D2, TAPER_START_D2, SIGMA_CLAMP, num_threads)
        return rgb, trans, ncontrib, {"last": last, "offsets": offsets, "entries": entries}

    def backward(self, proj, state, final_t, grad_rgb, bg):
        return _kernels.backward(
            proj.means2d, proj.conics, proj.colors, proj.alphas, proj.rects,
            state["offsets"], state["entries"], proj.height, proj.width, TILE_SIZE,
            final_t, state["last"], grad_rgb, bg,
            CUTOFF_D2, TAPER_START_D2, SIGMA_CLAMP)


class PythonBackend:
    name = "python"

    def forward(self, proj, stop_t, num_threads):
        rgb, trans, ncontrib, last = py_kernels.forward(proj, stop_t, num_threads)
        return rgb, trans, ncontrib, {"last": last}

    def backward(self, proj, state, final_t, grad_rgb, bg):
        return py_kernels.backward(proj, final_t, state["last"], grad_rgb, np.asarray(bg))


_active = None


def get_backend(name: str | None = None):
    """Resolve a backend by name, env var, or availability."""
    global _active
    if name is None:
        name = os.environ.get("SPLATFORGE_BACKEND", "").strip() or None
    if name is not None:
        if name == "compiled":
            if _kernels is None:
                raise ConfigError("compiled backend requested but the extension is not built")
            return CompiledBackend()
        if name == "python":
            return PythonBackend()
        raise ConfigError(f"unknown backend {name!r}; expected 'compiled' or 'python'")
    if _active is None:
        _active = CompiledBackend() if _kernels is not None else PythonBackend()
    return _active


def available_backends() -> list[str]:
    names = []
    if _kernels is not None:
        names.append("compiled")
    names.append("python")
    return names
