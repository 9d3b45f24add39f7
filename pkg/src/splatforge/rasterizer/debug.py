"""Debug dumps of rendered buffers: PNG preview plus raw float arrays."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from splatforge.io.images import write_png
from splatforge.rasterizer.common import RenderedImage


def dump_render(image: RenderedImage, directory, stem: str) -> list[Path]:
    """Write <stem>.png plus raw .npy buffers; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [directory / f"{stem}.png",
             directory / f"{stem}_rgb.npy",
             directory / f"{stem}_transmittance.npy",
             directory / f"{stem}_contrib.npy"]
    write_png(paths[0], image.rgb)
    np.save(paths[1], image.rgb)
    np.save(paths[2], image.final_transmittance)
    np.save(paths[3], image.contrib_count)
    return paths
