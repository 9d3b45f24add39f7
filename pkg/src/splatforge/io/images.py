"""PNG export for rendered images."""

from __future__ import annotations

import numpy as np
from PIL import Image


def write_png(path, rgb: np.ndarray):
    """Save an H x W x 3 float image in [0, 1] as 8-bit PNG."""
    arr = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8), mode="RGB").save(path)
