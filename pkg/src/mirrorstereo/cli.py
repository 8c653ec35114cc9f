"""Command-line pipeline driver.

Subcommands::

    mirrorstereo generate    <spec.json | bench16> --out DIR
    mirrorstereo reconstruct <scene-dir> --out DIR [options]
    mirrorstereo evaluate    <recon-dir> <scene-dir> [--tau T] [--out DIR]
    mirrorstereo ablate      <bench-dir> --out DIR [--runs N] [options]

All options can also come from a JSON file via --config; explicit flags
override file values.  Every run with the same inputs and seed writes
byte-identical outputs.

Exit codes: 0 success, 2 input error, 3 missing prerequisite,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fileio, pipeline, scenegen
from .backbone import NoiseModel
from .errors import (
    MirrorStereoError,
    NumericalFailure,
    ParseError,
    PlaneUnavailable,
)
from .geometry import CameraPose, Intrinsics

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISSING = 3
EXIT_NUMERICAL = 4


class MissingPrerequisite(MirrorStereoError):
    """A required input file for this step does not exist."""


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, optimizer: bool = True) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="JSON file with config values; flags override it")
    p.add_argument("--seed", type=int, default=None)
    if optimizer:
        p.add_argument("--backbone", choices=("triangulate", "simulate"),
                       default=None)
        p.add_argument("--no-sym", action="store_true",
                       help="disable the symmetric pose terms")
        p.add_argument("--noise-point", type=float, default=None,
                       metavar="SIGMA")
        p.add_argument("--noise-pose", default=None, metavar="DEG:TRANS")
        p.add_argument("--noise-scale", type=float, default=None,
                       metavar="SIGMA")
        p.add_argument("--noise-px", type=float, default=None, metavar="SIGMA")
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--tau", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorstereo",
        description="Mirror-based single-view stereo pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic scene directories")
    g.add_argument("spec", help='scene spec JSON file or the preset "bench16"')
    g.add_argument("--out", required=True, metavar="DIR")
    g.add_argument("--noise-px", type=float, default=None, metavar="SIGMA")
    g.add_argument("--config", metavar="FILE")
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reconstruct", help="reconstruct one scene directory")
    r.add_argument("scene_dir", metavar="scene-dir")
    r.add_argument("--out", required=True, metavar="DIR")
    _add_common(r)
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="score a reconstruction against truth")
    e.add_argument("recon_dir", metavar="recon-dir")
    e.add_argument("scene_dir", metavar="scene-dir")
    e.add_argument("--tau", type=float, default=None)
    e.add_argument("--out", default=None, metavar="DIR",
                   help="report directory (default: the recon directory)")
    e.add_argument("--config", metavar="FILE")
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("ablate", help="paired sym / no-sym comparison")
    a.add_argument("bench_dir", metavar="bench-dir")
    a.add_argument("--out", required=True, metavar="DIR")
    a.add_argument("--runs", type=int, default=50)
    _add_common(a)
    a.set_defaults(func=cmd_ablate)
    return parser


def _resolve_config(args: argparse.Namespace) -> pipeline.PipelineConfig:
    values = pipeline.PipelineConfig().to_dict()
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        if not Path(cfg_path).is_file():
            raise MissingPrerequisite(f"config file not found: {cfg_path}")
        file_cfg = fileio.read_json(cfg_path)
        if not isinstance(file_cfg, dict):
            raise ParseError("config file must hold a JSON object", cfg_path)
        values.update(file_cfg)
    direct = {
        "backbone": "backbone", "seed": "seed", "tau": "tau",
        "noise_point": "noise_point", "noise_scale": "noise_scale",
        "noise_px": "noise_px", "max_iters": "max_iters", "lr": "lr",
        "tol": "tol"}
    for attr, key in direct.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    pose = getattr(args, "noise_pose", None)
    if pose is not None:
        deg, trans = NoiseModel.parse_pose(str(pose))
        values["noise_pose_deg"] = deg
        values["noise_pose_trans"] = trans
    if getattr(args, "no_sym", False):
        values["use_sym"] = False
    return pipeline.PipelineConfig.from_dict(values)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _spec_from_json(data: dict, seed_override: int | None) -> scenegen.SceneSpec:
    if not isinstance(data, dict):
        raise ParseError("scene spec must be a JSON object")
    try:
        m = data["mirror"]
        mirror = scenegen.MirrorRect(
            tuple(m["center"]), tuple(m["axis_u"]), tuple(m["axis_v"]),
            float(m["extent_u"]), float(m["extent_v"]),
            float(m.get("density", 1200.0)))
        prims = tuple(scenegen._primitive_from_dict(p)
                      for p in data.get("primitives", []))
        K = (fileio.intrinsics_from_dict(data["intrinsics"])
             if "intrinsics" in data
             else Intrinsics(70.0, 70.0, 32.0, 24.0, 64, 48))
        camera = None
        if "camera" in data and not data.get("auto_camera", False):
            camera = fileio.pose_from_dict(data["camera"])
        seed = int(data.get("seed", 0))
    except KeyError as e:
        raise ParseError(f"scene spec missing field {e.args[0]!r}")
    if seed_override is not None:
        seed = seed_override
    return scenegen.SceneSpec(seed=seed, mirror=mirror, primitives=prims,
                              intrinsics=K, camera=camera)


def _write_scene(spec: scenegen.SceneSpec, directory: Path,
                 noise_px: float) -> scenegen.SceneGroundTruth:
    gt = scenegen.generate(spec)
    scenegen.export_scene(gt, directory)
    corrs, _ = scenegen.render_observations(gt, noise_px, seed=spec.seed)
    fileio.write_corrs_csv(directory / "corrs.csv", corrs)
    return gt


def _scene_summary(name: str, gt: scenegen.SceneGroundTruth) -> str:
    counts = np.bincount(gt.labels, minlength=5)
    mask_px = int(np.count_nonzero(gt.mask.data))
    return (f"{name}: {len(gt.points)} points "
            f"(direct {counts[1]}, mirror {counts[2]}, both {counts[3]}, "
            f"surface {counts[4]}), mask {mask_px} px")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    if args.spec == "bench16":
        for spec in scenegen.bench16_specs():
            name = f"scene_{spec.seed:02d}"
            gt = _write_scene(spec, out / name, config.noise_px)
            print(_scene_summary(name, gt))
        print(f"wrote 16 scenes to {out}")
        return EXIT_OK
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise MissingPrerequisite(f"spec file not found: {spec_path}")
    spec = _spec_from_json(fileio.read_json(spec_path), args.seed)
    gt = _write_scene(spec, out, config.noise_px)
    print(_scene_summary(out.name or str(out), gt))
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

def _load_scene(scene_dir: Path) -> scenegen.SceneGroundTruth:
    if not scene_dir.is_dir():
        raise MissingPrerequisite(f"scene directory not found: {scene_dir}")
    if not (scene_dir / "mask.pgm").is_file():
        raise MissingPrerequisite(f"mirror mask missing: {scene_dir}/mask.pgm")
    return scenegen.import_scene(scene_dir)


def _load_corrs(scene_dir: Path, required: bool) -> np.ndarray | None:
    path = scene_dir / "corrs.csv"
    if not path.is_file():
        if required:
            raise MissingPrerequisite(f"correspondences missing: {path}")
        return None
    return fileio.read_corrs_csv(path)


def cmd_reconstruct(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scene_dir = Path(args.scene_dir)
    out = Path(args.out)
    gt = _load_scene(scene_dir)
    corrs = _load_corrs(scene_dir, required=config.backbone == "triangulate")
    try:
        result = pipeline.reconstruct(gt, config, corrs)
    except NumericalFailure as e:
        trace = getattr(e, "trace", None)
        if trace is not None:
            out.mkdir(parents=True, exist_ok=True)
            pipeline.write_trace_csv(out / "trace.csv", trace)
        raise
    pipeline.write_recon(out, result, config)
    bd = result.breakdown
    print(f"optimized {len(result.trace) - 1} iterations, "
          f"final loss {bd.total:.6g} "
          f"(pairwise {bd.pairwise:.6g}, rot {bd.rot:.6g}, trans {bd.trans:.6g})")
    if result.sym_residual is not None:
        print(f"symmetry residual: {result.sym_residual[0]:.6g} deg, "
              f"{result.sym_residual[1]:.6g} units")
    print(f"wrote reconstruction to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    recon_dir = Path(args.recon_dir)
    if not recon_dir.is_dir():
        raise MissingPrerequisite(f"recon directory not found: {recon_dir}")
    gt = _load_scene(Path(args.scene_dir))
    fused, _, poses = pipeline.read_recon(recon_dir)
    result = pipeline.evaluate_recon(fused, poses, gt, config.tau)
    out = Path(args.out) if args.out else recon_dir
    pipeline.write_evaluation(out, result)
    print(result.metrics.markdown())
    unit = "abs. units" if result.pose.translation_absolute else "%"
    print(f"Virtual pose: R_err {result.pose.rotation_deg:.4f} deg, "
          f"T_err {result.pose.translation:.4f} {unit}")
    print(f"wrote report to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------

def cmd_ablate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    bench = Path(args.bench_dir)
    if not bench.is_dir():
        raise MissingPrerequisite(f"bench directory not found: {bench}")
    scene_dirs = sorted(d for d in bench.iterdir()
                        if d.is_dir() and (d / "scene.json").is_file())
    if not scene_dirs:
        if (bench / "scene.json").is_file():
            scene_dirs = [bench]  # a single scene directory works too
        else:
            raise MissingPrerequisite(f"no scene directories under {bench}")
    scenes = []
    for d in scene_dirs:
        gt = _load_scene(d)
        corrs = _load_corrs(d, required=config.backbone == "triangulate")
        scenes.append((d.name, gt, corrs))
    result = pipeline.run_ablation(scenes, config, n_runs=args.runs)
    out = Path(args.out)
    pipeline.write_ablation(out, result)
    s = result.summary()
    print(f"{s['runs']} paired runs over {len(scenes)} scenes")
    print(f"with sym loss:    R_err {s['mean_r_err_sym']:.4f} deg, "
          f"T_err {s['mean_t_err_sym']:.4f}")
    print(f"without sym loss: R_err {s['mean_r_err_nosym']:.4f} deg, "
          f"T_err {s['mean_t_err_nosym']:.4f}")
    print(f"paired win rate: {100.0 * s['win_rate']:.1f}%")
    if result.degenerate:
        print("degenerate fixture: pose noise is zero, both settings "
              "start at the optimum")
    print(f"wrote ablation report to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MissingPrerequisite, PlaneUnavailable) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING
    except NumericalFailure as e:
        where = f" at iteration {e.iteration}" if e.iteration is not None else ""
        print(f"error: numerical failure{where}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MirrorStereoError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
