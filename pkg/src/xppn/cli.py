"""Command-line front end: ``xppn generate|solve|bench|render|export``.

Exit codes: 0 success, 2 usage, 3 limit hit with an incumbent, 4 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import model_ir
from .benders import BendersConfig, benders_solve
from .bounds import compute_bounds
from .heuristic import HeuristicConfig, heuristic_solve
from .instance import (MODES, RADII_RANGES, InstanceFormatError, InstanceValidationError,
                       generate, load_instance, write_instance)
from .touring import FeasibilityError, read_solution, write_solution

EXIT_OK, EXIT_USAGE, EXIT_LIMIT, EXIT_INVALID = 0, 2, 3, 4

BENCH_HEADER = ["size", "radii", "mode", "seed", "heur_cost", "final_cost", "final_gap_pct",
                "exact_s", "heur_s", "cuts", "status"]
PROVENANCE = ("instances are generated from explicit seeds; published tables average "
              "unseeded instances, so only protocol-level parity is expected")


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


# --------------------------------------------------------------------------
# generate / solve / export


def cmd_generate(args) -> int:
    inst = generate(args.size, args.radii, args.mode, args.seed)
    _write(args.out, write_instance(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    heur_cfg = HeuristicConfig(seed=args.seed)
    log_lines: list[str] = []
    if args.method == "heuristic":
        t0 = time.monotonic()
        sol = heuristic_solve(inst, heur_cfg)
        sol = dataclasses.replace(sol, status="heuristic")
        log_lines.append(f"heuristic cost {sol.cost:.10g} in {time.monotonic() - t0:.3f} s")
        code = EXIT_OK
    else:
        cfg = BendersConfig(time_limit=args.time_limit, heuristic=heur_cfg)
        res = benders_solve(inst, args.eps, cfg, relative=True)
        log_lines.append("iter, LB, UB, gap, tour, cuts, elapsed")
        log_lines += list(res.log)
        log_lines.append(f"status {res.status} LB {res.lower_bound:.10g} UB {res.upper_bound:.10g}")
        sol = dataclasses.replace(res.best, status=res.status)
        code = EXIT_LIMIT if res.status == "time_limit" else EXIT_OK
    _write(args.out, write_solution(sol))
    log_text = "\n".join(log_lines) + "\n"
    if args.log:
        _write(args.log, log_text)
    else:
        sys.stderr.write(log_text)
    return code


FORMULATIONS = ("mtz", "sec", "ssec", "time")


def cmd_export(args) -> int:
    inst = load_instance(args.instance)
    bounds = compute_bounds(inst)
    if args.formulation == "mtz":
        model = model_ir.build_mtz(inst, bounds)
    elif args.formulation == "time":
        model = model_ir.build_time_dependent(inst, bounds)
    else:
        model, _ = model_ir.build_sec(inst, bounds, symmetric=args.formulation == "ssec")
    _write(args.out, model_ir.export_model(model))
    return EXIT_OK


# --------------------------------------------------------------------------
# benchmark grid


@dataclass(frozen=True)
class BenchRow:
    size: int
    radii_class: int
    mode: int
    seed: int | str
    heuristic_cost: float
    final_cost: float
    final_gap_percent: float
    exact_time_s: float
    heuristic_time_s: float
    cuts: float
    status: str

    def cells(self) -> list[str]:
        def num(x, digits=10):
            return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}g}"

        return [str(self.size), str(self.radii_class), str(self.mode), str(self.seed),
                num(self.heuristic_cost), num(self.final_cost), num(self.final_gap_percent, 6),
                num(self.exact_time_s, 6), num(self.heuristic_time_s, 6), num(self.cuts, 6),
                self.status]


def _bench_one(job) -> BenchRow:
    size, radii, mode, seed, eps, limit = job
    try:
        inst = generate(size, radii, mode, seed)
        cfg = BendersConfig(time_limit=limit)
        res = benders_solve(inst, eps, cfg, relative=True)
        return BenchRow(size, radii, mode, seed, res.heuristic.cost, res.upper_bound,
                        res.gap_percent, res.wall_time, res.heuristic_time, len(res.cuts),
                        res.status)
    except Exception as exc:  # a failed run is recorded, the grid goes on
        nan = float("nan")
        return BenchRow(size, radii, mode, seed, nan, nan, nan, nan, nan, nan,
                        f"error:{type(exc).__name__}")


def _average(rows: list[BenchRow]) -> BenchRow:
    ok = [r for r in rows if not r.status.startswith("error")]

    def mean(attr):
        vals = [getattr(r, attr) for r in ok]
        return float(np.mean(vals)) if vals else float("nan")

    solved = sum(r.status == "optimal" for r in rows)
    r0 = rows[0]
    return BenchRow(r0.size, r0.radii_class, r0.mode, "avg", mean("heuristic_cost"),
                    mean("final_cost"), mean("final_gap_percent"), mean("exact_time_s"),
                    mean("heuristic_time_s"), mean("cuts"), f"solved {solved}/{len(rows)}")


def worker_count(flag: int | None) -> int:
    env = os.environ.get("XPPN_THREADS")
    if env:
        return max(1, int(env))
    return max(1, flag or os.cpu_count() or 1)


def run_bench(sizes, radii, modes, seeds: int, eps: float, time_limit: float,
              workers: int = 1) -> list[BenchRow]:
    """All runs of the grid in (size, radii, mode, seed) order, without averages."""
    jobs = [(s, r, m, k, eps, time_limit) for s in sizes for r in radii for m in modes
            for k in range(1, seeds + 1)]
    if not jobs:
        raise ValueError("benchmark grid is empty")
    if workers <= 1:
        return [_bench_one(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_bench_one, jobs))


def bench_csv(rows: list[BenchRow], seeds: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for k in range(0, len(rows), seeds):
        cell = rows[k:k + seeds]
        for r in cell:
            w.writerow(r.cells())
        w.writerow(_average(cell).cells())
    return buf.getvalue()


def profile_csv(rows: list[BenchRow], points: int = 25) -> str:
    """Cumulative count of optimally solved runs against a log-spaced time grid."""
    times = sorted(r.exact_time_s for r in rows if r.status == "optimal")
    hi = max(times[-1] if times else 1.0, 1e-2)
    grid = np.logspace(-2, math.log10(hi), points)
    grid[-1] = hi  # logspace can land just below the slowest run
    out = ["t,solved"]
    for t in grid:
        out.append(f"{t:.6g},{int(np.searchsorted(times, t, side='right'))}")
    return "\n".join(out) + "\n"


def cmd_bench(args) -> int:
    rows = run_bench(args.sizes, args.radii, args.modes, args.seeds, args.eps, args.time_limit,
                     worker_count(args.workers))
    out = Path(args.out)
    out.write_text(bench_csv(rows, args.seeds), encoding="utf-8", newline="\n")
    profile = Path(args.profile) if args.profile else out.with_suffix(".profile.csv")
    profile.write_text(profile_csv(rows), encoding="utf-8", newline="\n")
    meta = {"provenance": PROVENANCE, "eps_relative": args.eps, "time_limit_s": args.time_limit,
            "sizes": args.sizes, "radii": args.radii, "modes": args.modes, "seeds": args.seeds}
    out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8", newline="\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# SVG rendering

_PALETTE = ("#8ecae6", "#ffb703", "#90be6d", "#f4a261", "#cdb4db", "#a8dadc", "#e9c46a")


def _f(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _shape_svg(elem, fill: str, Y) -> list[str]:
    style = f'fill="{fill}" fill-opacity="0.45" stroke="#333" stroke-width="0.3"'
    if isinstance(elem, geo.Circle):
        cx, cy = elem.center
        return [f'<circle cx="{_f(cx)}" cy="{_f(Y(cy))}" r="{_f(elem.radius)}" {style}/>']
    if isinstance(elem, geo.Ellipse):
        cx, cy = elem.center
        deg = -math.degrees(elem.rotation)
        return [f'<ellipse cx="{_f(cx)}" cy="{_f(Y(cy))}" rx="{_f(elem.axes[0])}" '
                f'ry="{_f(elem.axes[1])}" transform="rotate({_f(deg)} {_f(cx)} {_f(Y(cy))})" {style}/>']
    if isinstance(elem, geo.Polygon):
        pts = " ".join(f"{_f(x)},{_f(Y(y))}" for x, y in elem.vertices)
        return [f'<polygon points="{pts}" {style}/>']
    if isinstance(elem, geo.SocRegion):
        # outline from support points in evenly spaced directions
        pts = []
        for k in range(120):
            t = 2 * math.pi * k / 120
            pts.append(elem._support_point(np.array([math.cos(t), math.sin(t)])))
        s = " ".join(f"{_f(p[0])},{_f(Y(p[1]))}" for p in pts)
        return [f'<polygon points="{s}" {style}/>']
    if isinstance(elem, geo.UnionSoc):
        return [line for m in elem.members for line in _shape_svg(m, fill, Y)]
    if isinstance(elem, geo.Chain):
        pts = " ".join(f"{_f(x)},{_f(Y(y))}" for x, y in elem.breakpoints)
        return [f'<polyline points="{pts}" fill="none" stroke="{fill}" stroke-width="1.2"/>']
    raise geo.DomainError(f"cannot draw {type(elem).__name__}")


def render_svg(inst, sol) -> str:
    boxes = np.array([geo.bounding_box(e) for e in inst.elements])
    x0, y0 = boxes[:, 0].min() - 5, boxes[:, 1].min() - 5
    x1, y1 = boxes[:, 2].max() + 5, boxes[:, 3].max() + 8

    def Y(y):
        return y0 + y1 - y  # flip so that y grows upwards

    w, h = x1 - x0, y1 - y0
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'viewBox="{_f(x0)} {_f(y0)} {_f(w)} {_f(h)}" width="{_f(8 * w)}" height="{_f(8 * h)}">',
           '<g id="elements">']
    for v, e in enumerate(inst.elements):
        out += _shape_svg(e, _PALETTE[v % len(_PALETTE)], Y)
        lx, ly = geo.representative_point(e)
        out.append(f'<text x="{_f(lx)}" y="{_f(Y(ly))}" font-size="3" '
                   f'text-anchor="middle">{v}</text>')
    out.append('</g>')
    out.append('<g id="tour" stroke="#111" stroke-width="0.4">')
    for v, wv in sol.tour.edges():
        a, b = sol.exit[v], sol.entry[wv]
        out.append(f'<line class="outer" x1="{_f(a[0])}" y1="{_f(Y(a[1]))}" '
                   f'x2="{_f(b[0])}" y2="{_f(Y(b[1]))}"/>')
    for v in range(len(inst)):
        a, b = sol.entry[v], sol.exit[v]
        if math.dist(a, b) > 1e-9:
            out.append(f'<line class="inner" stroke-dasharray="1,0.8" x1="{_f(a[0])}" '
                       f'y1="{_f(Y(a[1]))}" x2="{_f(b[0])}" y2="{_f(Y(b[1]))}"/>')
    out.append('</g>')
    out.append('<g id="points">')
    for v in range(len(inst)):
        for cls, p, col in (("entry", sol.entry[v], "#2a9d8f"), ("exit", sol.exit[v], "#e63946")):
            out.append(f'<rect class="{cls}" x="{_f(p[0] - 0.5)}" y="{_f(Y(p[1]) - 0.5)}" '
                       f'width="1" height="1" fill="{col}"/>')
    out.append('</g>')
    out.append(f'<text x="{_f(x0 + 2)}" y="{_f(y0 + 5)}" font-size="4">cost {sol.cost:.6f}</text>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


def cmd_render(args) -> int:
    inst = load_instance(args.instance)
    sol = read_solution(Path(args.solution).read_text(encoding="utf-8"), inst)
    _write(args.out, render_svg(inst, sol))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xppn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--radii", type=int, choices=sorted(RADII_RANGES), required=True)
    g.add_argument("--mode", type=int, choices=sorted(MODES), required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    s.add_argument("--method", choices=("heuristic", "benders"), default="benders")
    s.add_argument("--eps", type=float, default=1e-4, help="relative optimality gap")
    s.add_argument("--time-limit", type=float, default=7200.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.add_argument("--log")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run the benchmark grid")
    b.add_argument("--sizes", type=int, nargs="+", default=[5])
    b.add_argument("--radii", type=int, nargs="+", choices=sorted(RADII_RANGES), default=[1, 2, 3, 4])
    b.add_argument("--modes", type=int, nargs="+", choices=sorted(MODES), default=[1, 2, 3, 4])
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--eps", type=float, default=1e-4)
    b.add_argument("--time-limit", type=float, default=7200.0)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out", required=True)
    b.add_argument("--profile")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("render", help="draw a solution as SVG")
    r.add_argument("instance")
    r.add_argument("solution")
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_render)

    e = sub.add_parser("export", help="write a model in the canonical text format")
    e.add_argument("instance")
    e.add_argument("--formulation", choices=FORMULATIONS, default="mtz")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InstanceFormatError, InstanceValidationError, FeasibilityError, geo.DomainError,
            FileNotFoundError, ValueError) as exc:
        print(f"xppn: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
