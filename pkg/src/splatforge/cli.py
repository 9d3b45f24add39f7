"""Command-line surface: init, train, render, info.

Configuration comes from a JSON file (--config); flags override file values.
Exit codes: 0 success, 2 config error, 3 I/O error, 4 service error,
5 numerical abort.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
import time
from pathlib import Path

import numpy as np

import splatforge.errors as errors
from splatforge.core.types import Camera
from splatforge.core.activations import activate_params
from splatforge.guidance.predictors import MockNoisePredictor, RemoteNoisePredictor
from splatforge.initialization import (
    GrowConfig,
    add_ground_plane,
    center_at_origin,
    grow_and_perturb,
    grow_report,
    init_gaussians,
    mesh_to_point_cloud,
    random_colors,
)
from splatforge.io.images import write_png
from splatforge.io.obj import read_obj
from splatforge.io.ply import (
    read_gaussian_ply,
    read_mesh_ply,
    read_point_cloud_ply,
    write_gaussian_ply,
)
from splatforge.optimizer.config import TrainConfig
from splatforge.optimizer.loop import load_checkpoint, train
from splatforge.optimizer.resample import downscale
from splatforge.optimizer.sampling import FixedViewSampler, turntable_cameras
from splatforge.rasterizer import get_backend, render

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SERVICE = 4
EXIT_NUMERIC = 5


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except errors.InvalidParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (errors.IoError, errors.PlyParseError, errors.ObjParseError,
            FileNotFoundError, PermissionError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except errors.ServiceError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except errors.NumericalAbortError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except errors.SplatforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splatforge",
                                     description="Text-to-3D Gaussian splat generation")
    sub = parser.add_subparsers(required=True)

    p_init = sub.add_parser("init", help="initialize a Gaussian cloud from a 3D prior")
    p_init.add_argument("--config", type=Path, help="pipeline JSON config")
    p_init.add_argument("--prior", type=Path, help="prior mesh/point-cloud file (.ply/.obj)")
    p_init.add_argument("--prior-url", help="prior service base URL")
    p_init.add_argument("--prompt", help="generation prompt")
    p_init.add_argument("--motion-prompt",
                        help="simplified motion prompt for the text-to-motion branch")
    p_init.add_argument("--branch", choices=["text-to-3d", "text-to-motion"])
    p_init.add_argument("--ground", action="store_true", help="append a ground plane layer")
    p_init.add_argument("--seed", type=int)
    p_init.add_argument("--num-candidates", type=int)
    p_init.add_argument("--bbox-scale", type=float)
    p_init.add_argument("--out", type=Path, help="output directory")
    p_init.set_defaults(func=cmd_init)

    p_train = sub.add_parser("train", help="optimize a Gaussian cloud with guidance")
    p_train.add_argument("--config", type=Path)
    p_train.add_argument("--ply", type=Path, help="initialized splat PLY")
    p_train.add_argument("--resume", type=Path, help="checkpoint PLY to resume from")
    p_train.add_argument("--guidance", choices=["mock", "remote"], default="mock")
    p_train.add_argument("--guidance-url", help="guidance service URL (or env)")
    p_train.add_argument("--prompt")
    p_train.add_argument("--iters", type=int)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--render-res", type=int)
    p_train.add_argument("--guidance-res", type=int)
    p_train.add_argument("--out", type=Path)
    p_train.set_defaults(func=cmd_train)

    p_render = sub.add_parser("render", help="render PNG views of a splat PLY")
    p_render.add_argument("--ply", type=Path, required=True)
    p_render.add_argument("--turntable", type=int, nargs="?", const=120, default=None,
                          help="render N evenly spaced azimuths (default 120)")
    p_render.add_argument("--camera", action="append", default=[],
                          help="radius,azimuth,elevation view (repeatable)")
    p_render.add_argument("--radius", type=float, default=4.0)
    p_render.add_argument("--elevation", type=float, default=15.0)
    p_render.add_argument("--size", type=int, default=512)
    p_render.add_argument("--background", default="0,0,0")
    p_render.add_argument("--bench", action="store_true",
                          help="print frames/sec over 100 renders")
    p_render.add_argument("--dump-buffers", action="store_true",
                          help="also write raw float transmittance/contrib buffers")
    p_render.add_argument("--out", type=Path)
    p_render.set_defaults(func=cmd_render)

    p_info = sub.add_parser("info", help="print stats of a splat PLY")
    p_info.add_argument("--ply", type=Path, required=True)
    p_info.set_defaults(func=cmd_info)
    return parser


def _load_pipeline_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise errors.IoError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise errors.ConfigError(f"config is not valid JSON: {exc}") from exc


def _fetch_remote_prior(url: str, prompt: str, branch: str, seed: int):
    import requests

    try:
        resp = requests.post(f"{url.rstrip('/')}/v1/generate_prior",
                             json={"prompt": prompt, "branch": branch, "seed": seed},
                             timeout=600)
    except requests.RequestException as exc:
        raise errors.ServiceError(f"prior service unreachable at {url}: {exc}") from exc
    if resp.status_code != 200:
        raise errors.ServiceError(
            f"prior service error {resp.status_code}: {resp.text[:200]}")
    payload = resp.json()
    return base64.b64decode(payload["ply"]), bool(payload.get("colors_present", True))


def cmd_init(args) -> int:
    cfg = _load_pipeline_config(args.config)
    prior_cfg = cfg.get("prior", {})
    branch = args.branch or prior_cfg.get("branch", "text-to-3d")
    ground = args.ground or bool(prior_cfg.get("ground", False))
    prompt = args.prompt or cfg.get("prompt", "")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out_dir = Path(args.out or cfg.get("output_dir", "."))

    grow_dict = dict(cfg.get("grow", {}))
    if args.num_candidates is not None:
        grow_dict["num_candidates"] = args.num_candidates
    if args.bbox_scale is not None:
        grow_dict["bbox_scale"] = args.bbox_scale
    grow_dict.setdefault("rng_seed", seed)
    grow_cfg = GrowConfig.from_dict(grow_dict)

    source = args.prior or prior_cfg.get("source")
    url = args.prior_url or prior_cfg.get("url")
    colors_present = True
    if source:
        path = Path(source)
        if not path.exists():
            raise errors.IoError(f"prior file not found: {path}")
        if path.suffix.lower() == ".obj":
            mesh = read_obj(path)
            pt_m = mesh_to_point_cloud(mesh) if mesh.has_colors else None
            colors_present = mesh.has_colors
            verts = mesh.vertices
        else:
            try:
                mesh = read_mesh_ply(path)
                colors_present = mesh.has_colors
                pt_m = mesh_to_point_cloud(mesh) if mesh.has_colors else None
                verts = mesh.vertices
            except errors.PlyParseError:
                pc = read_point_cloud_ply(path)
                pt_m, verts = pc, pc.positions
    elif url:
        request_prompt = args.motion_prompt if (branch == "text-to-motion"
                                                and args.motion_prompt) else prompt
        raw, colors_present = _fetch_remote_prior(url, request_prompt, branch, seed)
        tmp = out_dir / "prior.ply"
        out_dir.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(raw)
        try:
            mesh = read_mesh_ply(tmp)
            pt_m = mesh_to_point_cloud(mesh) if mesh.has_colors else None
            verts = mesh.vertices
            colors_present = colors_present and mesh.has_colors
        except errors.PlyParseError:
            pc = read_point_cloud_ply(tmp)
            pt_m, verts = pc, pc.positions
    else:
        raise errors.ConfigError("init needs exactly one prior source (--prior or --prior-url)")

    if branch == "text-to-motion" or not colors_present:
        pt_m = random_colors(verts, seed)
        pt_m, center = center_at_origin(pt_m)
    if pt_m is None:
        raise errors.ConfigError("prior has no colors; use the text-to-motion branch")

    if ground:
        pt_m = add_ground_plane(pt_m, rng_seed=seed)
    grown = grow_and_perturb(pt_m, grow_cfg)
    cloud = init_gaussians(grown)

    out_dir.mkdir(parents=True, exist_ok=True)
    ply_path = out_dir / "initialized.ply"
    write_gaussian_ply(ply_path, cloud)
    report = grow_report(pt_m, grown, cloud)
    report["branch"] = branch
    report["grow"] = grow_cfg.to_dict()
    (out_dir / "init_report.json").write_text(json.dumps(report, indent=2))
    print(f"wrote {ply_path} ({cloud.num_gaussians} gaussians) and init_report.json")
    return 0


def _mock_with_self_targets(cloud, config: TrainConfig):
    """Mock guidance pulling toward the initial cloud's own renders (8 fixed views)."""
    cams = turntable_cameras(count=8, radius=2.5, elevation=15.0,
                             width=config.render_resolution,
                             height=config.render_resolution,
                             fov_y=config.camera.fov_y)
    mock = MockNoisePredictor()
    for cam in cams:
        image = render(cloud, cam, config.background_color)
        mock.register_target(cam, downscale(image.rgb, config.guidance_resolution))
    return mock, FixedViewSampler(cams)


def cmd_train(args) -> int:
    cfg = _load_pipeline_config(args.config)
    train_dict = dict(cfg.get("train", {}))
    if args.iters is not None:
        train_dict["iterations"] = args.iters
    if args.seed is not None:
        train_dict["rng_seed"] = args.seed
    if args.prompt is not None:
        train_dict["prompt"] = args.prompt
    elif "prompt" in cfg:
        train_dict.setdefault("prompt", cfg["prompt"])
    if args.render_res is not None:
        train_dict["render_resolution"] = args.render_res
    if args.guidance_res is not None:
        train_dict["guidance_resolution"] = args.guidance_res
    config = TrainConfig.from_dict(train_dict)
    out_dir = Path(args.out or cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    start_iteration = 0
    rng_state = adam_state = None
    if args.resume:
        cloud, start_iteration, rng_state, adam_state = load_checkpoint(args.resume)
        print(f"resuming from iteration {start_iteration}")
    else:
        ply = args.ply or (cfg.get("init_ply") and Path(cfg["init_ply"]))
        if not ply:
            raise errors.ConfigError("train needs --ply (or --resume)")
        if not Path(ply).exists():
            raise errors.IoError(f"initialized PLY not found: {ply}")
        cloud = read_gaussian_ply(ply)

    camera_sampler = None
    if args.guidance == "mock":
        if config.background_mode == "random":
            config.background_mode = "fixed"
        predictor, camera_sampler = _mock_with_self_targets(cloud, config)
    else:
        predictor = RemoteNoisePredictor(endpoint=args.guidance_url)
        health = predictor.health()
        print(f"guidance service: {health.get('status')} "
              f"(2d={health.get('model_2d')}, 3d={health.get('model_3d')})")

    metrics_path = out_dir / "metrics.ndjson"
    mode = "a" if args.resume else "w"
    with open(metrics_path, mode) as metrics_file:
        def write_metric(record):
            metrics_file.write(json.dumps(record) + "\n")

        result = train(cloud, predictor, config, callbacks=[write_metric],
                       camera_sampler=camera_sampler, checkpoint_dir=out_dir,
                       start_iteration=start_iteration, rng_state=rng_state,
                       adam_state=adam_state, keep_records=False)

    final_path = out_dir / "final.ply"
    write_gaussian_ply(final_path, cloud)
    print(f"trained {result.iterations_run} iterations "
          f"({result.skips} skipped); wrote {final_path} and {metrics_path}")
    return 0


def _parse_background(text: str) -> tuple:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise errors.ConfigError("background must be 'r,g,b' or a single gray value")
    return tuple(parts)


def cmd_render(args) -> int:
    if not args.ply.exists():
        raise errors.IoError(f"splat PLY not found: {args.ply}")
    cloud = read_gaussian_ply(args.ply)
    bg = _parse_background(args.background)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    cameras: list[Camera] = []
    for spec in args.camera:
        vals = [float(v) for v in spec.split(",")]
        if len(vals) != 3:
            raise errors.ConfigError(f"--camera expects radius,azimuth,elevation, got {spec!r}")
        cameras.append(Camera(radius=vals[0], azimuth=vals[1], elevation=vals[2],
                              width=args.size, height=args.size))
    if args.turntable is not None or not cameras:
        count = args.turntable if args.turntable is not None else 120
        cameras = turntable_cameras(count=count, radius=args.radius,
                                    elevation=args.elevation,
                                    width=args.size, height=args.size)

    if args.bench:
        backend = get_backend()
        warm = render(cloud, cameras[0], bg)
        n_bench = 100
        start = time.perf_counter()
        for i in range(n_bench):
            render(cloud, cameras[i % len(cameras)], bg)
        elapsed = time.perf_counter() - start
        print(f"backend={backend.name}: {n_bench / elapsed:.2f} frames/sec "
              f"({1000 * elapsed / n_bench:.1f} ms/frame, {cloud.num_gaussians} gaussians, "
              f"{args.size}x{args.size})")
        return 0

    for i, cam in enumerate(cameras):
        image = render(cloud, cam, bg)
        if args.dump_buffers:
            from splatforge.rasterizer.debug import dump_render
            dump_render(image, out_dir, f"view_{i:04d}")
        else:
            write_png(out_dir / f"view_{i:04d}.png", image.rgb)
    print(f"wrote {len(cameras)} PNGs to {out_dir}")
    return 0


def cmd_info(args) -> int:
    if not args.ply.exists():
        raise errors.IoError(f"splat PLY not found: {args.ply}")
    cloud = read_gaussian_ply(args.ply)
    alpha, scales, _, rgb = activate_params(cloud)
    box_min = cloud.positions.min(axis=0)
    box_max = cloud.positions.max(axis=0)
    info = {
        "gaussians": cloud.num_gaussians,
        "bbox_min": [round(float(v), 6) for v in box_min],
        "bbox_max": [round(float(v), 6) for v in box_max],
        "opacity": {"min": round(float(alpha.min()), 6),
                    "max": round(float(alpha.max()), 6),
                    "mean": round(float(alpha.mean()), 6)},
        "scale": {"min": round(float(scales.min()), 8),
                  "max": round(float(scales.max()), 8),
                  "median": round(float(np.median(scales)), 8)},
        "color_mean": [round(float(v), 4) for v in rgb.mean(axis=0)],
        "backend": get_backend().name,
    }
    print(json.dumps(info, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
