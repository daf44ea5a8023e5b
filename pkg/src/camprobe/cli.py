"""Command-line surface: trajectory generation, warping, the toy guided
sampler, control-scale probing, metric evaluation, and SVG plots.

All commands are deterministic given their full flag set; the environment
variable CAMPROBE_SEED, when set, overrides any --seed flag.  Exit codes:
0 success, 2 validation error, 3 I/O error, 4 numeric failure.  Failures
print one machine-readable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .charts import probe_curves_svg
from .diffusion import (
    STRATEGIES,
    ToyDenoiser,
    UpdateConfig,
    linear_schedule,
    sample,
)
from .displacement import DEPTH_MODES, backward_field, normalize_depth, resize_bilinear
from .geometry import MOTION_KINDS, make_motion, relative_to_first
from .io import (
    FileFormatError,
    atomic_write_text,
    read_report,
    read_tensor,
    read_trajectory,
    write_report,
    write_tensor,
    write_trajectory,
)
from .metrics import (
    DegenerateBaselineError,
    LeakageCalibration,
    MetricsReport,
    axis_alignment,
    compute_lambda,
    depth_warp_rmse,
    epipolar_rmse,
    leakage,
    psnr,
    rpe,
)
from .resample import grid_sample
from .scene import filled_depth, generate_scene, mutual_visibility, render

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

# quality-proxy cap so "perfect" rows stay finite JSON numbers
QUALITY_CAP_DB = 99.0

# per-kind end-of-clip magnitude at control scale 1.0
_BASE_MAGNITUDE = {
    "pan": 0.25,
    "tilt": 0.25,
    "truck": 0.3,
    "pedestal": 0.3,
    "dolly": 0.3,
    "zoom": 0.3,
    "arc": 0.5,
    "orbit": 0.5,
}


def _seed_override(seed: int) -> int:
    env = os.environ.get("CAMPROBE_SEED")
    return int(env) if env is not None else seed


def _comma_floats(text: str):
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _comma_names(text: str):
    return [x.strip() for x in text.split(",") if x.strip() != ""]


def _window(args) -> tuple:
    return (args.window_start, args.window_end)


def _require(args, *names) -> None:
    """Flags may come from the command line or a --config file; either way
    these must be present by execution time."""
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise ValueError(
            "missing required flag(s): " + ", ".join(f"--{n}" for n in missing)
        )


def _per_frame_fields(traj, depths):
    rel = relative_to_first(traj)
    height, width = depths[0].shape
    fields = []
    for f in range(traj.num_frames):
        depth = depths[f]
        if depth.shape != (height, width):
            depth = resize_bilinear(depth, height, width)
        fields.append(backward_field(depth, rel.poses[f], traj.intrinsics))
    return fields


def cmd_traj(args) -> int:
    _require(args, "kind", "magnitude", "out")
    traj = make_motion(args.kind, args.magnitude, args.frames, radius=args.radius)
    write_trajectory(args.out, traj)
    print(f"wrote {args.frames}-frame {args.kind} trajectory to {args.out}")
    return EXIT_OK


def cmd_warp(args) -> int:
    _require(args, "frames-in", "traj", "out")
    frames = read_tensor(args.frames_in).astype(float)
    if frames.ndim != 4:
        raise ValueError(f"frames tensor must be (F, H, W, C), got rank {frames.ndim}")
    traj = read_trajectory(args.traj)
    num_frames, height, width, _ = frames.shape
    if traj.num_frames != num_frames:
        raise ValueError(
            f"trajectory has {traj.num_frames} frames, tensor has {num_frames}"
        )
    if args.depth_in is not None:
        depth = read_tensor(args.depth_in).astype(float)
        if depth.ndim != 3 or depth.shape[0] != num_frames:
            raise ValueError("depth tensor must be (F, H, W) matching the frames")
        depths = [depth[f] for f in range(num_frames)]
    else:
        if args.constant_depth <= 0:
            raise ValueError("--constant-depth must be positive")
        depths = [
            np.full((height, width), args.constant_depth) for _ in range(num_frames)
        ]
    depths = normalize_depth(depths, args.depth_norm)
    fields = _per_frame_fields(traj, depths)
    out = np.stack([grid_sample(frames[f], fields[f]) for f in range(num_frames)])
    write_tensor(args.out, out)
    print(f"warped {num_frames} frames to {args.out}")
    return EXIT_OK


def _scene_target_and_depths(scene, traj, height, width, depth_mode, constant_depth):
    """Canonical target video plus per-frame depth maps for the fields."""
    rel = relative_to_first(traj)
    canonical = render(scene, rel.poses[0], traj.intrinsics, height, width)
    target = np.repeat(canonical.image[None], traj.num_frames, axis=0)
    if depth_mode == "gt":
        views = [render(scene, p, traj.intrinsics, height, width) for p in rel.poses]
        depths = [filled_depth(v) for v in views]
    else:
        depths = [np.full((height, width), constant_depth) for _ in rel.poses]
        views = None
    return canonical, target, depths, views


def cmd_sample(args) -> int:
    _require(args, "traj", "out")
    seed = _seed_override(args.seed)
    meta_path = args.meta if args.meta is not None else args.out + ".json"
    traj = read_trajectory(args.traj)
    scene = generate_scene(args.scene_seed, args.num_planes)
    canonical, target, depths, views = _scene_target_and_depths(
        scene, traj, args.height, args.width, args.depth_mode, args.constant_depth
    )
    cfg = UpdateConfig(
        omega=args.omega,
        window=_window(args),
        strategy=args.strategy,
        seed=seed,
        fresh_noise=not args.recovered_noise,
    )
    schedule = linear_schedule(args.steps)
    out = sample(ToyDenoiser(target), schedule, traj, depths, cfg)
    write_tensor(args.out, out)

    meta = {
        "tool_version": __version__,
        "scene_seed": args.scene_seed,
        "num_planes": args.num_planes,
        "frames": traj.num_frames,
        "height": args.height,
        "width": args.width,
        "steps": args.steps,
        "strategy": args.strategy,
        "omega": args.omega,
        "window": [args.window_start, args.window_end],
        "seed": seed,
        "depth_mode": args.depth_mode,
        "constant_depth": args.constant_depth,
        "recovered_noise": bool(args.recovered_noise),
        "trajectory": args.traj,
    }
    atomic_write_text(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if args.out_depth is not None:
        write_tensor(args.out_depth, np.stack(depths))
    if args.out_corr is not None:
        rel = relative_to_first(traj)
        items = []
        for f, pose in enumerate(rel.poses):
            view = views[f] if views is not None else render(
                scene, pose, traj.intrinsics, args.height, args.width
            )
            items.append(
                {"frame": f, "pairs": view.correspondences.tolist()}
            )
        doc = {"width": args.width, "height": args.height, "items": items}
        atomic_write_text(args.out_corr, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"sampled {traj.num_frames} frames to {args.out}")
    return EXIT_OK


def cmd_probe(args) -> int:
    _require(args, "scales", "motions", "out")
    scales = _comma_floats(args.scales)
    motions = _comma_names(args.motions)
    if not scales or not motions:
        raise ValueError("need at least one scale and one motion")
    for m in motions:
        if m not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {m!r}")
    scene = generate_scene(args.scene_seed, args.num_planes)
    curves = []
    for motion in motions:
        points = []
        for scale in scales:
            magnitude = _BASE_MAGNITUDE[motion] * scale
            traj = make_motion(motion, magnitude, args.frames)
            rel = relative_to_first(traj)
            canonical = render(scene, rel.poses[0], traj.intrinsics, args.height, args.width)
            mags, quals = [], []
            for pose in rel.poses:
                view = render(scene, pose, traj.intrinsics, args.height, args.width)
                field = backward_field(filled_depth(view), pose, traj.intrinsics)
                mags.append(
                    float(np.mean(np.linalg.norm(field.offsets[field.valid], axis=-1)))
                )
                mask = mutual_visibility(canonical, view, field)
                mask &= view.plane_id == 0  # static backdrop region
                warped = grid_sample(canonical.image, field)
                quals.append(min(psnr(warped, view.image, mask), QUALITY_CAP_DB))
            points.append(
                {
                    "scale": scale,
                    "dynamics": float(np.mean(mags)),
                    "quality": float(np.mean(quals)),
                }
            )
        curves.append({"motion": motion, "points": points})
    doc = {
        "metadata": {
            "tool_version": __version__,
            "scene_seed": args.scene_seed,
            "num_planes": args.num_planes,
            "frames": args.frames,
            "height": args.height,
            "width": args.width,
            "base_magnitude": {m: _BASE_MAGNITUDE[m] for m in motions},
            "proxies": {
                "dynamics": "mean displacement magnitude of the applied backward "
                "field over valid pixels and frames (normalized units)",
                "quality": "PSNR (dB) between the warped canonical render and the "
                f"direct render on the mutually visible backdrop region, "
                f"capped at {QUALITY_CAP_DB}",
            },
        },
        "curves": curves,
    }
    atomic_write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"probed {len(motions)} motions x {len(scales)} scales to {args.out}")
    return EXIT_OK


def _pooled_epipolar(corr_doc, gt_rel, intrinsics) -> float | None:
    """Pool per-frame epipolar RMSEs weighted by pair counts."""
    width = int(corr_doc["width"])
    height = int(corr_doc["height"])
    total_sq, total_n = 0.0, 0
    for item in corr_doc["items"]:
        pairs = np.asarray(item["pairs"], dtype=float)
        if pairs.size == 0:
            continue
        pose = gt_rel.poses[int(item["frame"])]
        try:
            rmse = epipolar_rmse(pairs, pose, intrinsics, (width, height))
        except DegenerateBaselineError:
            continue
        total_sq += rmse * rmse * len(pairs)
        total_n += len(pairs)
    if total_n == 0:
        return None
    return float(np.sqrt(total_sq / total_n))


def cmd_eval(args) -> int:
    _require(args, "est", "gt", "out")
    est = read_trajectory(args.est)
    gt = read_trajectory(args.gt)
    report = MetricsReport()
    report.metadata = {
        "tool_version": __version__,
        "est": args.est,
        "gt": args.gt,
        "align": args.align,
        "windows": _comma_floats(args.windows),
    }
    if args.rpe:
        windows = [int(w) for w in _comma_floats(args.windows)]
        report.rpe_t, report.rpe_r = rpe(est, gt, windows, align=args.align)
    if args.axis:
        report.axis_cos_t, report.axis_cos_r, report.axis_combined = axis_alignment(est, gt)
    if args.leakage:
        if args.lam is not None:
            cal = LeakageCalibration(d_ref=args.lam, r_ref=1.0, lam=args.lam)
        elif args.cal_rot and args.cal_trans:
            rot_seqs = [read_trajectory(p) for p in _comma_names(args.cal_rot)]
            trans_seqs = [read_trajectory(p) for p in _comma_names(args.cal_trans)]
            cal = compute_lambda(rot_seqs, trans_seqs)
        else:
            raise ValueError(
                "--leakage needs --lam or both --cal-rot and --cal-trans"
            )
        report.leakage_gt = leakage(est, gt, cal, norm="gt")
        report.leakage_pred = leakage(est, gt, cal, norm="pred")
        report.metadata["lambda"] = cal.lam
    if args.corr is not None:
        with open(args.corr, "r", encoding="utf-8") as fh:
            corr_doc = json.load(fh)
        report.epipolar_rmse_px = _pooled_epipolar(
            corr_doc, relative_to_first(gt), gt.intrinsics
        )
    if args.frames is not None:
        if args.depths is None:
            raise ValueError("--frames requires --depths")
        frames = read_tensor(args.frames).astype(float)
        depth = read_tensor(args.depths).astype(float)
        if frames.ndim != 4 or depth.ndim != 3:
            raise ValueError("--frames must be (F, H, W, C) and --depths (F, H, W)")
        report.depth_warp_rmse = depth_warp_rmse(
            list(frames), list(depth), gt
        )
    write_report(args.out, report)
    print(f"wrote evaluation report to {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    _require(args, "report", "out")
    doc = read_report(args.report)
    if "curves" not in doc:
        raise ValueError("report has no 'curves' section to plot")
    svg = probe_curves_svg(doc["curves"], title=args.title)
    atomic_write_text(args.out, svg)
    print(f"wrote plot to {args.out}")
    return EXIT_OK


def _add_common_sample_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--height", type=int, default=60, help="latent/image height")
    p.add_argument("--width", type=int, default=104, help="latent/image width")
    p.add_argument("--scene-seed", type=int, default=0, help="synthetic scene seed")
    p.add_argument("--num-planes", type=int, default=4, help="planes in the scene")


def build_parser():
    """Build the argument parser; returns (parser, subparser map)."""
    parser = argparse.ArgumentParser(
        prog="camprobe",
        description="Displacement-field camera control on a toy diffusion loop, "
        "with trajectory/warp/probe/eval tooling.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("traj", help="generate a named camera trajectory file")
    p.add_argument("--kind", choices=MOTION_KINDS)
    p.add_argument("--magnitude", type=float,
                   help="end-of-clip rotation (rad) or translation (scene units)")
    p.add_argument("--frames", type=int, default=13)
    p.add_argument("--radius", type=float, default=2.0, help="orbit/arc circle radius")
    p.add_argument("--out")
    p.set_defaults(func=cmd_traj)
    subparsers["traj"] = p

    p = sub.add_parser("warp", help="apply per-frame displacement fields to a tensor")
    p.add_argument("--frames-in", help="input (F, H, W, C) tensor file")
    p.add_argument("--traj")
    p.add_argument("--depth-in", help="optional (F, H, W) depth tensor file")
    p.add_argument("--constant-depth", type=float, default=1.0,
                   help="constant depth when --depth-in is not given")
    p.add_argument("--depth-norm", choices=DEPTH_MODES, default="raw")
    p.add_argument("--out")
    p.set_defaults(func=cmd_warp)
    subparsers["warp"] = p

    p = sub.add_parser("sample", help="run the toy guided denoising pipeline")
    p.add_argument("--traj")
    p.add_argument("--out", help="output (F, H, W, 3) tensor file")
    p.add_argument("--meta", help="metadata JSON path (default: <out>.json)")
    p.add_argument("--out-depth", help="optional (F, H, W) depth tensor output")
    p.add_argument("--out-corr", help="optional correspondences JSON output")
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--strategy", choices=STRATEGIES, default="full_resample")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--window-start", type=float, default=1.0)
    p.add_argument("--window-end", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recovered-noise", action="store_true",
                   help="recover reimposed noise from the latent instead of sampling")
    p.add_argument("--depth-mode", choices=("gt", "constant"), default="gt")
    p.add_argument("--constant-depth", type=float, default=1.0)
    _add_common_sample_flags(p)
    p.set_defaults(func=cmd_sample)
    subparsers["sample"] = p

    p = sub.add_parser("probe", help="sweep control scales x motion kinds")
    p.add_argument("--scales", help="comma-separated control scales")
    p.add_argument("--motions", help="comma-separated motion kinds")
    p.add_argument("--frames", type=int, default=13)
    p.add_argument("--out", help="output report JSON")
    _add_common_sample_flags(p)
    p.set_defaults(func=cmd_probe)
    subparsers["probe"] = p

    p = sub.add_parser("eval", help="evaluate an estimated trajectory and consistency")
    p.add_argument("--est")
    p.add_argument("--gt")
    p.add_argument("--rpe", action="store_true")
    p.add_argument("--axis", action="store_true")
    p.add_argument("--leakage", action="store_true")
    p.add_argument("--align", choices=("none", "sim3"), default="none")
    p.add_argument("--windows", default="1,4,8,12")
    p.add_argument("--lam", type=float, help="precomputed leakage unit conversion")
    p.add_argument("--cal-rot", help="comma-separated rotation-only trajectory files")
    p.add_argument("--cal-trans", help="comma-separated translation-only trajectory files")
    p.add_argument("--corr", help="correspondences JSON for the epipolar metric")
    p.add_argument("--frames", help="(F, H, W, C) tensor for the depth-warp metric")
    p.add_argument("--depths", help="(F, H, W) tensor for the depth-warp metric")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    subparsers["eval"] = p

    p = sub.add_parser("plot", help="render a probe report as an SVG chart")
    p.add_argument("--report")
    p.add_argument("--out")
    p.add_argument("--title", default="Control scale sweep")
    p.set_defaults(func=cmd_plot)
    subparsers["plot"] = p

    return parser, subparsers


def _apply_config_file(subparsers, argv):
    """Let a JSON config file supply flag defaults; explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    with open(known.config, "r", encoding="utf-8") as fh:
        try:
            overrides = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ValueError("config file must hold a JSON object of flag defaults")
    defaults = {str(k).replace("-", "_"): v for k, v in overrides.items()}
    for sub in subparsers.values():
        sub.set_defaults(**defaults)
    # strip the --config flag itself before the real parse
    out = []
    skip = False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == "--config":
            skip = True
            continue
        if token.startswith("--config="):
            continue
        out.append(token)
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        argv = _apply_config_file(subparsers, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError, FileFormatError) as exc:
        _fail(EXIT_IO, exc)
        return EXIT_IO
    except OSError as exc:
        _fail(EXIT_IO, exc)
        return EXIT_IO
    except (ValueError, KeyError, IndexError) as exc:
        _fail(EXIT_VALIDATION, exc)
        return EXIT_VALIDATION
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        _fail(EXIT_NUMERIC, exc)
        return EXIT_NUMERIC


def _fail(code: int, exc: BaseException) -> None:
    line = json.dumps({"error": {"code": code, "message": str(exc)}})
    print(line, file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
