"""Command-line entry point: ``visopt <command> --scenario F ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .critical import segment_bound
from .errors import ArrangementDegeneracy, ObserverOutsideFreeSpace, ScenarioError, VisoptError
from .gradients import GRID_COLUMNS, gradient_grid
from .metrics import Pose, metric_V, metric_V_area, metric_V_fov, metric_V_range
from .norcent import compass_test, run_multistart, runs_to_csv
from .render import LAYERS, render_scene
from .scenario import load_scenario
from .visibility import visibility_region

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_RUNTIME = 0, 2, 3, 4


class InputError(Exception):
    pass


def _point(text: str) -> np.ndarray:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--at expects X,Y, got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InputError("--at must be finite")
    return np.array([x, y])


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _stem(args, sc) -> Path:
    return Path(args.out) / sc.name


def optimality_tol(sc) -> float:
    return 1e-3 * sc.d2.area / sc.fs.bounding_diameter


# ---------------------------------------------------------------- commands

def cmd_visibility(args, sc) -> int:
    x = _point(args.at)
    fs = sc.fs
    if fs.classify(x)[0] < 0:
        raise InputError(f"point ({x[0]:g}, {x[1]:g}) is outside the free space")
    cfg = sc.metric
    region = visibility_region(fs, x, R=cfg.range)
    stem = _stem(args, sc)
    _write(stem.with_name(stem.name + "_visibility.json"), _json(region.to_json()))
    _write(stem.with_name(stem.name + "_visibility.svg"),
           render_scene(sc, ["environment", "d1", "d2", "visibility_region_at"], at=x))
    print(f"V_area = {metric_V_area(fs, x)!r}")
    print(f"V = {metric_V(fs, cfg, x)!r}")
    if cfg.range is not None:
        print(f"V_range = {metric_V_range(fs, cfg, x)!r}")
    if cfg.fov is not None:
        print(f"V_fov = {metric_V_fov(fs, cfg, Pose(tuple(x), sc.heading))!r}")
    return EXIT_OK


def cmd_structures(args, sc) -> int:
    cs = sc.structure
    stem = _stem(args, sc)
    _write(stem.with_name(stem.name + "_structures.json"), _json(cs.to_json()))
    _write(stem.with_name(stem.name + "_structures.svg"),
           render_scene(sc, ["environment", "inflection_segments", "partition_faces"]))
    n = len(sc.fs.reflex)
    print(f"segments = {len(cs.segments)} (bound {segment_bound(n)} for {n} reflex vertices)")
    print(f"faces = {len(cs.faces)}")
    return EXIT_OK


def grid_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def cmd_grad(args, sc) -> int:
    if args.grid < 2:
        raise InputError("--grid must be at least 2")
    rows, worst = gradient_grid(sc.fs, sc.structure, sc.metric, sc.d1, args.grid)
    stem = _stem(args, sc)
    _write(stem.with_name(stem.name + "_grad.csv"), grid_csv(rows))
    _write(stem.with_name(stem.name + "_grad.svg"),
           render_scene(sc, ["environment", "d1", "d2", "gradient_field"], grid_rows=rows))
    checked = sum(r[9] for r in rows)
    marked = sum(r[6] != "ok" for r in rows)
    if worst is None:
        print(f"max-rel-err = n/a (finite differences only), points = {len(rows)}, marked = {marked}")
    else:
        print(f"max-rel-err = {worst:.3e} over {checked} smooth points, marked = {marked}")
    return EXIT_OK


def optimize(sc, seed=None, parallel=False, workers=None):
    """Multistart runs plus a compass check at each final point."""
    obj = sc.objective()
    cfg = sc.norcent_config(seed)
    runs = run_multistart(obj, cfg, sc.starts, parallel=parallel, workers=workers)
    tol = optimality_tol(sc)
    checks = []
    for run in runs:
        checks.append(None if run.error else compass_test(obj, run.final, tol))
    return cfg, runs, checks


def cmd_optimize(args, sc) -> int:
    if not sc.starts:
        raise InputError("scenario has no starts")
    cfg, runs, checks = optimize(sc, args.seed, args.parallel, args.workers)
    stem = _stem(args, sc)
    _write(stem.with_name(stem.name + "_runs.csv"), runs_to_csv(runs))
    doc = {"scenario": sc.name, "mode": sc.mode, "runs": []}
    for run, chk in zip(runs, checks):
        d = run.to_json(cfg)
        d["compass"] = None if chk is None else {"passed": chk[0], "derivatives": chk[1]}
        doc["runs"].append(d)
    _write(stem.with_name(stem.name + "_runs.json"), _json(doc))
    _write(stem.with_name(stem.name + "_optimize.svg"),
           render_scene(sc, ["environment", "d1", "d2", "trajectories"], runs=runs))
    failed = 0
    for i, (run, chk) in enumerate(zip(runs, checks)):
        if run.error:
            failed += 1
            print(f"run {i}: error {run.error}")
            continue
        verdict = "local optimum" if chk[0] else "not optimal"
        print(f"run {i}: final=({run.final[0]:.6g}, {run.final[1]:.6g}) value={run.final_value:.6g} "
              f"iterations={len(run.iterates) - 1} converged={run.converged} compass: {verdict}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_render(args, sc) -> int:
    layers = [s for s in args.layers.split(",") if s]
    unknown = [s for s in layers if s not in LAYERS]
    if unknown or not layers:
        raise InputError(f"--layers must be a subset of {','.join(LAYERS)}")
    at = _point(args.at) if args.at else None
    if "visibility_region_at" in layers:
        if at is None:
            raise InputError("layer visibility_region_at needs --at")
        if sc.fs.classify(at)[0] < 0:
            raise InputError(f"point ({at[0]:g}, {at[1]:g}) is outside the free space")
    runs = None
    if "trajectories" in layers:
        _, runs, _ = optimize(sc, args.seed, args.parallel)
    rows = None
    if "gradient_field" in layers:
        rows, _ = gradient_grid(sc.fs, sc.structure, sc.metric, sc.d1, args.grid)
    svg = render_scene(sc, layers, at=at, runs=runs, grid_rows=rows)
    path = _stem(args, sc)
    _write(path.with_name(path.name + "_render.svg"), svg)
    print(f"wrote {path.name}_render.svg with layers {','.join(layers)}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="visopt", description="Visibility structure and hiding-position optimization.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("--scenario", required=True, help="scenario JSON file or bundled name")
        s.add_argument("--out", default=".", help="output directory (default: current)")
        s.set_defaults(fn=fn)
        return s

    s = add("visibility", cmd_visibility, "visibility region and metrics at a point")
    s.add_argument("--at", required=True, metavar="X,Y")
    add("structures", cmd_structures, "inflection segments and partition faces")
    s = add("grad", cmd_grad, "gradient field over a grid of D1")
    s.add_argument("--grid", type=int, required=True, metavar="N")
    s = add("optimize", cmd_optimize, "multistart Norcent runs")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--parallel", action="store_true")
    s.add_argument("--workers", type=int, default=None)
    s = add("render", cmd_render, "SVG with selected layers")
    s.add_argument("--layers", required=True, help="comma-separated: " + ",".join(LAYERS))
    s.add_argument("--at", default=None, metavar="X,Y")
    s.add_argument("--grid", type=int, default=20)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--parallel", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2 ** 64:
            raise InputError("--seed must be an unsigned 64-bit integer")
        return args.fn(args, sc)
    except (ScenarioError, InputError, ObserverOutsideFreeSpace) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ArrangementDegeneracy as err:
        print(f"error: arrangement degeneracy: {err} (segments {list(err.ids)})", file=sys.stderr)
        return EXIT_DEGENERATE
    except (VisoptError, ValueError, ArithmeticError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
