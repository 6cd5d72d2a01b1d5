"""Command-line entry point: ``hybridskill {synth,transport,execute,report}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_json
from .demonstration import TransportedDemonstration, load_demonstration, save_demonstration
from .errors import ConfigError, DidNotConverge, SkillError
from .geometry import Pose, quat_to_matrix
from .pipeline import generalize
from .scenarios import evaluate_scenario, get_scenario, scenario_names
from .simulation import FollowerState, run_rollout
from .transport import KeypointSet, load_keypoints, save_keypoints

logger = logging.getLogger("hybridskill")

REPORT_COLUMNS = (
    "scenario", "variant", "variant_name", "ok", "error", "max_residual", "max_shift",
    "min_dist_original", "min_dist_transported", "max_rotation_error", "rollout_done",
    "rollout_steps", "final_error", "warnings",
)


def _run_config(args) -> RunConfig:
    base = RunConfig.from_dict(load_json(args.config)) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for flag, key in (("lam", "regularization"), ("gamma", "time_weight"), ("window", "window"),
                      ("alpha", "alpha"), ("servo_step", "servo_step"), ("max_steps", "max_steps"),
                      ("track_tol", "track_tol")):
        if getattr(args, flag, None) is not None:
            overrides[key] = getattr(args, flag)
    if getattr(args, "no_projection", False):
        overrides["projection"] = False
    return base.updated(**overrides)


def cmd_synth(args) -> int:
    scenario = get_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    source, target = scenario.keypoints(args.variant)
    paths = {"demo": out / "demo.json", "source": out / "source.json", "target": out / "target.json"}
    save_demonstration(scenario.demonstration(), paths["demo"])
    save_keypoints(source, paths["source"])
    save_keypoints(target, paths["target"])
    for p in paths.values():
        print(p)
    return 0


def cmd_transport(args) -> int:
    config = _run_config(args)
    demo = load_demonstration(args.demo)
    source = load_keypoints(args.source, "source")
    target = load_keypoints(args.target, "target")
    gen = generalize(demo, source, target, config.regularization, config.projection)
    save_demonstration(gen.demonstration, args.out)
    report = {
        "projection": config.projection,
        "regularization": config.regularization,
        "residuals": gen.residuals.tolist(),
        "shifts": gen.shifts.tolist(),
        "projection_indices": [] if gen.projection is None else gen.projection.indices.tolist(),
        "duplicate_projections": [] if gen.projection is None else [list(p) for p in gen.projection.duplicates],
    }
    text = json.dumps(report, indent=1)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_execute(args) -> int:
    config = _run_config(args)
    demo = load_demonstration(args.demo, cls=TransportedDemonstration)
    start = None
    if args.start_offset is not None:
        start = FollowerState(Pose(demo.positions[0] + np.asarray(args.start_offset), demo.orientations[0]),
                              np.array(demo.servos[0]))
    prefix = Path(args.trace)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    try:
        trace = run_rollout(
            demo, time_weight=config.time_weight, window=config.window, alpha=config.alpha,
            servo_step=config.servo_step, max_steps=config.max_steps, track_tol=config.track_tol,
            start=start, metadata={"demo": str(args.demo)},
        )
    except DidNotConverge as exc:
        exc.trace.save_json(prefix.with_suffix(".json"))
        exc.trace.save_csv(prefix.with_suffix(".csv"))
        print(f"done=False steps={len(exc.trace)} final_error={exc.trace.final_error:.6g}")
        raise
    trace.save_json(prefix.with_suffix(".json"))
    trace.save_csv(prefix.with_suffix(".csv"))
    print(f"done=True steps={len(trace)} final_error={trace.final_error:.6g}")
    return 0


def _sweep_entries(data: dict) -> list[tuple[str, list | None]]:
    entries = []
    for item in data:
        if isinstance(item, str):
            entries.append((item, None))
        elif isinstance(item, dict) and set(item) <= {"scenario", "variants"} and "scenario" in item:
            entries.append((item["scenario"], item.get("variants")))
        else:
            raise ConfigError(f"bad sweep entry {item!r}")
    return entries


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ";".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)


def cmd_report(args) -> int:
    data = load_json(args.config) if args.config else {}
    sweep = data.pop("scenarios", scenario_names())
    if not isinstance(sweep, list):
        raise ConfigError("'scenarios' must be a list")
    config = RunConfig.from_dict(data)
    rows = []
    for name, variants in _sweep_entries(sweep):
        scenario = get_scenario(name)
        for v in variants if variants is not None else range(len(scenario.targets)):
            r = evaluate_scenario(scenario, int(v), config)
            shifts = np.asarray(r.shifts).reshape(-1, 3)
            rows.append({
                "scenario": r.scenario, "variant": r.variant, "variant_name": r.variant_name,
                "ok": r.ok, "error": r.error, "max_residual": r.max_residual,
                "max_shift": float(np.max(np.linalg.norm(shifts, axis=1), initial=0.0)),
                "min_dist_original": r.min_dist_original, "min_dist_transported": r.min_dist_transported,
                "max_rotation_error": r.max_rotation_error, "rollout_done": r.rollout_done,
                "rollout_steps": r.rollout_steps, "final_error": r.final_error, "warnings": r.warnings,
            })
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    failed = [f"{r['scenario']}[{r['variant']}]" for r in rows if not r["ok"]]
    print(f"{len(rows)} variants, {len(failed)} failed" + (f": {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridskill", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write demonstration and keypoint files for a scenario")
    p.add_argument("scenario", help=f"builtin name ({', '.join(scenario_names())}) or scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--variant", type=int, default=0, help="target variant index")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("transport", help="generalize a demonstration to new keypoints")
    p.add_argument("--demo", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True, help="transported demonstration file")
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--lambda", dest="lam", type=float, help="kernel ridge regularization")
    p.add_argument("--no-projection", action="store_true", help="fit on the raw keypoints")
    p.add_argument("--config", help="RunConfig JSON")
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("execute", help="replay a demonstration in the kinematic simulator")
    p.add_argument("demo")
    p.add_argument("--trace", required=True, help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--servo-step", type=float)
    p.add_argument("--track-tol", type=float)
    p.add_argument("--start-offset", type=float, nargs=3, metavar=("DX", "DY", "DZ"))
    p.add_argument("--config", help="RunConfig JSON")
    p.set_defaults(func=cmd_execute)

    p = sub.add_parser("report", help="evaluate a scenario sweep into a CSV table")
    p.add_argument("--config", help="sweep JSON: {'scenarios': [...], plus RunConfig keys}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SkillError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
