"""The score-distillation training loop.

Each iteration renders a camera batch, downscales to the guidance resolution,
noises the batch at a sampled timestep, queries the predictor, assembles the
w(t)(eps_hat - eps) image gradient, chains it through the box-filter adjoint
and the renderer backward, averages over the batch, and applies per-group
Adam updates. Guidance failures skip the iteration; too many abort the run.

A single seeded RNG stream drives background, cameras, timestep, and noise in
a fixed draw order, so mock-guidance runs are bit-reproducible and resumable
from checkpoints that snapshot the stream state.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from splatforge.core.types import GaussianCloud
from splatforge.errors import GuidanceFailureError, NumericalAbortError
from splatforge.guidance.predictors import camera_key
from splatforge.guidance.schedule import NoiseSchedule, add_noise, sample_timestep
from splatforge.guidance.sds import GuidanceRequest, sds_gradient
from splatforge.io.ply import read_gaussian_ply, write_gaussian_ply
from splatforge.optimizer.adam import Adam
from splatforge.optimizer.config import TrainConfig
from splatforge.optimizer.resample import downscale, upscale_adjoint
from splatforge.optimizer.sampling import OrbitSampler
from splatforge.rasterizer import render, render_backward

PARAM_GROUPS = ("position", "color", "opacity", "scaling", "rotation")


@dataclass
class TrainResult:
    cloud: GaussianCloud
    iterations_run: int
    skips: int
    records: list = field(default_factory=list)


def train(cloud: GaussianCloud, guidance, config: TrainConfig, callbacks=(),
          camera_sampler=None, checkpoint_dir=None,
          start_iteration: int = 0, rng_state: dict | None = None,
          adam_state: dict | None = None, keep_records: bool = True) -> TrainResult:
    """Optimize the cloud in place for config.iterations steps."""
    schedule = NoiseSchedule(config.num_train_steps, config.beta_start, config.beta_end)
    rng = np.random.default_rng(config.rng_seed)
    if rng_state is not None:
        rng.bit_generator.state = rng_state
    sampler = camera_sampler or OrbitSampler(
        config.camera, config.render_resolution, config.render_resolution)
    adam = Adam(cloud.param_arrays(), config.learning_rates,
                config.adam_betas, config.adam_eps)
    if adam_state is not None:
        adam.load_state_dict(adam_state)

    skip_budget = max(1, int(np.ceil(config.max_skip_fraction * config.iterations)))
    skips = 0
    result = TrainResult(cloud=cloud, iterations_run=0, skips=0)

    for iteration in range(start_iteration, config.iterations):
        t_start = time.perf_counter()
        if config.background_mode == "random":
            background = rng.random(3)
        else:
            background = np.asarray(config.background_color, dtype=np.float64)
        cameras = [sampler.sample(rng) for _ in range(config.batch_size)]
        t_frac = sample_timestep(iteration, rng)
        gres = config.guidance_resolution
        epsilon = rng.standard_normal((config.batch_size, gres, gres, 3))

        record = {"iter": iteration, "t": round(t_frac, 6), "skips": skips}
        try:
            images = [render(cloud, cam, background, save_ctx=True) for cam in cameras]
            x = np.stack([downscale(im.rgb, gres) for im in images])
            z_t = add_noise(x, t_frac, epsilon, schedule)
            request = GuidanceRequest(
                images=x, prompt=config.prompt, t=t_frac,
                guidance_scale=config.guidance_scale,
                seed=int(rng.integers(2**63 - 1)),
                camera_keys=tuple(camera_key(c) for c in cameras))
            eps_hat = guidance.predict(request, z_t, epsilon)
            w_t = schedule.weight_at(t_frac, config.weight_mode)
            grad_x = sds_gradient(eps_hat, epsilon, w_t)

            grads = {g: None for g in PARAM_GROUPS}
            for b, image in enumerate(images):
                fine = upscale_adjoint(grad_x[b], config.render_resolution)
                view_grads = render_backward(image, fine)
                for g in PARAM_GROUPS:
                    if grads[g] is None:
                        grads[g] = view_grads[g]
                    else:
                        grads[g] += view_grads[g]
            for g in PARAM_GROUPS:
                grads[g] /= config.batch_size
            adam.step(grads)
            record["grad_norms"] = {
                g: float(np.linalg.norm(grads[g])) for g in PARAM_GROUPS}
        except GuidanceFailureError as exc:
            skips += 1
            record["skipped"] = str(exc)
            if skips > skip_budget:
                raise NumericalAbortError(
                    f"aborting: {skips} guidance failures exceed "
                    f"{config.max_skip_fraction:.0%} of {config.iterations} iterations "
                    f"(last: {exc})") from exc

        record["skips"] = skips
        record["ms"] = round(1000.0 * (time.perf_counter() - t_start), 3)
        if keep_records:
            result.records.append(record)
        for cb in callbacks:
            cb(record)
        result.iterations_run = iteration + 1 - start_iteration
        result.skips = skips

        if (checkpoint_dir and config.checkpoint_every
                and (iteration + 1) % config.checkpoint_every == 0
                and iteration + 1 < config.iterations):
            save_checkpoint(checkpoint_dir, iteration + 1, cloud, adam, rng)

    return result


def _encode_f64(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape),
            "data": base64.b64encode(np.ascontiguousarray(arr, "<f8").tobytes()).decode()}


def _decode_f64(blob: dict) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    return np.frombuffer(raw, "<f8").reshape(blob["shape"]).copy()


def save_checkpoint(directory, iteration: int, cloud: GaussianCloud,
                    adam: Adam, rng: np.random.Generator) -> Path:
    """Splat PLY plus a JSON optimizer-state sidecar; exact resume state."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ply_path = directory / f"checkpoint_{iteration:06d}.ply"
    write_gaussian_ply(ply_path, cloud)
    state = adam.state_dict()
    sidecar = {
        "iteration": iteration,
        "rng_state": rng.bit_generator.state,
        "adam": {
            "step_count": state["step_count"],
            "skip_counts": state["skip_counts"],
            "m": {k: _encode_f64(v) for k, v in state["m"].items()},
            "v": {k: _encode_f64(v) for k, v in state["v"].items()},
        },
    }
    (directory / f"checkpoint_{iteration:06d}.json").write_text(json.dumps(sidecar))
    return ply_path


def load_checkpoint(ply_path) -> tuple[GaussianCloud, int, dict, dict]:
    """Returns (cloud, iteration, rng_state, adam_state) from a checkpoint pair."""
    ply_path = Path(ply_path)
    cloud = read_gaussian_ply(ply_path)
    sidecar = json.loads(ply_path.with_suffix(".json").read_text())
    adam_state = {
        "step_count": sidecar["adam"]["step_count"],
        "skip_counts": sidecar["adam"]["skip_counts"],
        "m": {k: _decode_f64(v) for k, v in sidecar["adam"]["m"].items()},
        "v": {k: _decode_f64(v) for k, v in sidecar["adam"]["v"].items()},
    }
    return cloud, int(sidecar["iteration"]), sidecar["rng_state"], adam_state
