"""Training configuration with the published defaults.

Defaults: 1200 iterations at batch 4, guidance scale 100, rendering at
1024^2 downscaled to 512^2 for guidance, camera orbit radius 1.5-4.0 with
azimuth +-180 deg and elevation -10..60 deg, per-group learning rates
{opacity 1e-2, position 5e-5, color 1.25e-2, scaling 1e-3, rotation 1e-2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from splatforge.errors import ConfigError

DEFAULT_LEARNING_RATES = {
    "opacity": 1e-2,
    "position": 5e-5,
    "color": 1.25e-2,
    "scaling": 1e-3,
    "rotation": 1e-2,
}


@dataclass
class CameraRanges:
    radius_range: tuple[float, float] = (1.5, 4.0)
    azimuth_range: tuple[float, float] = (-180.0, 180.0)
    elevation_range: tuple[float, float] = (-10.0, 60.0)
    fov_y: float = 49.0

    def __post_init__(self):
        for name in ("radius_range", "azimuth_range", "elevation_range"):
            lo, hi = getattr(self, name)
            if not (lo < hi):
                raise ConfigError(f"{name} must be a non-degenerate (lo, hi) interval")
            setattr(self, name, (float(lo), float(hi)))
        if not (0.0 < self.fov_y < 180.0):
            raise ConfigError("fov_y must lie in (0, 180)")


@dataclass
class TrainConfig:
    iterations: int = 1200
    batch_size: int = 4
    guidance_scale: float = 100.0
    render_resolution: int = 1024
    guidance_resolution: int = 512
    camera: CameraRanges = field(default_factory=CameraRanges)
    learning_rates: dict = field(default_factory=lambda: dict(DEFAULT_LEARNING_RATES))
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-15
    weight_mode: str = "one_minus_alpha_bar"
    num_train_steps: int = 1000
    beta_start: float = 0.00085
    beta_end: float = 0.012
    rng_seed: int = 0
    background_mode: str = "random"          # "random" or "fixed"
    background_color: tuple = (0.0, 0.0, 0.0)
    prompt: str = ""
    checkpoint_every: int = 0                # 0 disables periodic checkpoints
    max_skip_fraction: float = 0.10

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.guidance_resolution > self.render_resolution:
            raise ConfigError("guidance_resolution must be <= render_resolution")
        if self.render_resolution % self.guidance_resolution != 0:
            raise ConfigError("render_resolution must be divisible by guidance_resolution")
        missing = set(DEFAULT_LEARNING_RATES) - set(self.learning_rates)
        if missing:
            raise ConfigError(f"learning_rates missing groups: {sorted(missing)}")
        for group, lr in self.learning_rates.items():
            if not (lr > 0):
                raise ConfigError(f"learning rate for {group!r} must be > 0")
        if self.background_mode not in ("random", "fixed"):
            raise ConfigError("background_mode must be 'random' or 'fixed'")
        if any(not (0.0 <= c <= 1.0) for c in self.background_color):
            raise ConfigError("background_color components must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "camera" in d and isinstance(d["camera"], dict):
            cam = {k: tuple(v) if isinstance(v, list) else v for k, v in d["camera"].items()}
            d["camera"] = CameraRanges(**cam)
        for key in ("adam_betas", "background_color"):
            if key in d and isinstance(d[key], list):
                d[key] = tuple(d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "guidance_scale": self.guidance_scale,
            "render_resolution": self.render_resolution,
            "guidance_resolution": self.guidance_resolution,
            "camera": {
                "radius_range": list(self.camera.radius_range),
                "azimuth_range": list(self.camera.azimuth_range),
                "elevation_range": list(self.camera.elevation_range),
                "fov_y": self.camera.fov_y,
            },
            "learning_rates": dict(self.learning_rates),
            "adam_betas": list(self.adam_betas),
            "adam_eps": self.adam_eps,
            "weight_mode": self.weight_mode,
            "num_train_steps": self.num_train_steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "rng_seed": self.rng_seed,
            "background_mode": self.background_mode,
            "background_color": list(self.background_color),
            "prompt": self.prompt,
            "checkpoint_every": self.checkpoint_every,
            "max_skip_fraction": self.max_skip_fraction,
        }
