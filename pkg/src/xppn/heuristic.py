"""Two-phase heuristic: a Weber clustering picks one point per element, a VNS
orders those points, and the fixed-tour solver places the final points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from ._conic import ConicProgram
from .instance import Instance
from .touring import SubproblemConfig, Tour, TourSolution, solve_fixed_tour


@dataclass
class HeuristicConfig:
    vns_attempts: int = 25
    vns_neighborhood_size: int = 5
    vns_iterations: int = 10
    weber_tol: float = 1e-7
    weber_max_iters: int = 1000
    seed: int = 0
    subproblem: SubproblemConfig = field(default_factory=SubproblemConfig)

    def __post_init__(self):
        for name in ("vns_attempts", "vns_neighborhood_size", "vns_iterations", "weber_max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.weber_tol <= 0:
            raise ValueError("weber_tol must be positive")


@dataclass(frozen=True)
class WeberResult:
    center: geo.Point
    reps: dict
    objective: float
    history: tuple  # objective after each outer iteration


def _weber_objective(P: np.ndarray, c) -> float:
    return float(np.linalg.norm(P - c, axis=1).sum())


def weiszfeld(P: np.ndarray, start, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Geometric median of the rows of ``P`` starting from ``start``.

    Uses the Vardi-Zhang modification so an iterate landing on a data point
    does not stall.
    """
    y = np.asarray(start, float).copy()
    for _ in range(max_iter):
        D = np.linalg.norm(P - y, axis=1)
        at = D < 1e-12
        far = ~at
        if not far.any():
            return y
        w = 1.0 / D[far]
        T = (P[far] * w[:, None]).sum(axis=0) / w.sum()
        if at.any():
            R = ((P[far] - y) * w[:, None]).sum(axis=0)
            r = float(np.linalg.norm(R))
            eta = float(at.sum())
            if r <= eta:
                return y  # a data point is the median
            y_new = (1.0 - eta / r) * T + (eta / r) * y
        else:
            y_new = T
        step = float(np.linalg.norm(y_new - y))
        # guard against round-off reversing the descent
        if _weber_objective(P, y_new) > _weber_objective(P, y):
            return y
        y = y_new
        if step < tol:
            break
    return y


def _set_distance_sum(els, c) -> float:
    return float(sum(math.dist(geo.project(e, c), c) for e in els))


def _nearest_piece(elem, c):
    ps = geo.pieces(elem)
    d = [math.dist(geo.project(p, c), c) for p in ps]
    return ps[int(np.argmin(d))]


def _conic_centre(pcs) -> np.ndarray | None:
    """Exact minimiser of the summed distance to fixed convex pieces."""
    prog = ConicProgram()
    C = (prog.var(), prog.var())
    for pc in pcs:
        x = (prog.var(), prog.var())
        t = prog.var(0.0)
        prog.cost[t] = 1.0
        if isinstance(pc, geo.Segment):
            s = prog.var(0.0, 1.0)
            a, b = np.asarray(pc.a, float), np.asarray(pc.b, float)
            for k in range(2):
                prog.add_eq({x[k]: 1.0, s: -(b[k] - a[k])}, a[k])
        else:
            geo.add_membership(prog, geo.to_socset(pc), x)
        prog.add_norm_le(t, x, C)
    res = prog.minimize()
    return np.array([res.x[C[0]], res.x[C[1]]]) if res.ok else None


def weber_cluster(inst: Instance, cfg: HeuristicConfig | None = None) -> WeberResult:
    """Centre minimising the summed distance to the elements, plus its projections.

    Each iteration projects the centre onto every element and moves it to the
    Weiszfeld average of those projections; elements already containing the
    centre get no weight, and the step is halved until the objective drops.
    """
    cfg = cfg or HeuristicConfig()
    els = inst.elements
    if len(els) == 1:
        p = geo.representative_point(els[0])
        return WeberResult(p, {0: p}, 0.0, (0.0,))
    c = np.mean([geo.representative_point(e) for e in els], axis=0)
    obj = _set_distance_sum(els, c)
    history = [obj]
    for _ in range(cfg.weber_max_iters):
        reps = np.array([geo.project(e, c) for e in els])
        if len(els) == 2:
            target = 0.5 * (reps[0] + reps[1])
        else:
            D = np.linalg.norm(reps - c, axis=1)
            far = D > 1e-12
            if not far.any():
                break
            w = 1.0 / D[far]
            target = (reps[far] * w[:, None]).sum(axis=0) / w.sum()
        step = target - c
        t, moved = 1.0, False
        for _ in range(40):
            cand = c + t * step
            val = _set_distance_sum(els, cand)
            if val <= obj:
                moved = val < obj or len(els) == 2
                c, obj = cand, val
                break
            t *= 0.5
        history.append(obj)
        if not moved or t * float(np.linalg.norm(step)) < cfg.weber_tol:
            break
    # the averaging step stalls on element boundaries, where the distance is
    # not smooth; finish with an exact solve over the nearest convex pieces
    for _ in range(len(els) + 1):
        if len(els) == 2:
            break
        cand = _conic_centre([_nearest_piece(e, c) for e in els])
        if cand is None:
            break
        val = _set_distance_sum(els, cand)
        if val >= obj - 1e-12 * (1.0 + obj):
            break
        c, obj = cand, val
        history.append(obj)
    reps = {v: geo.project(e, c) for v, e in enumerate(els)}
    return WeberResult(geo._as_point(c), reps, obj, tuple(history))


# --------------------------------------------------------------------------
# VNS over a closed tour of points


def _tour_length(D: np.ndarray, order) -> float:
    idx = np.asarray(order)
    return float(D[idx, np.roll(idx, -1)].sum())


def _nearest_neighbour(D: np.ndarray) -> list[int]:
    n = len(D)
    order, left = [0], set(range(1, n))
    while left:
        last = order[-1]
        nxt = min(left, key=lambda j: (D[last, j], j))
        order.append(nxt)
        left.remove(nxt)
    return order


def two_opt(D: np.ndarray, order: list[int]) -> list[int]:
    """First-improvement 2-opt to a local optimum."""
    order = list(order)
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, n if i > 0 else n - 1):
                c, d = order[j], order[(j + 1) % n]
                delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
                if delta < -1e-12:
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    a, b = order[i], order[i + 1]
                    improved = True
    return order


def _shake(order: list[int], k: int, rng: np.random.Generator) -> list[int]:
    order = list(order)
    n = len(order)
    for _ in range(k):
        i, j = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
        order[i:j + 1] = order[i:j + 1][::-1]
    return order


def vns_tour(points, cfg: HeuristicConfig | None = None) -> Tour:
    cfg = cfg or HeuristicConfig()
    P = np.asarray(points, float).reshape(-1, 2)
    n = len(P)
    if n < 3:
        return Tour(tuple(range(n)))
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    rng = np.random.default_rng(cfg.seed)
    best = two_opt(D, _nearest_neighbour(D))
    best_len = _tour_length(D, best)
    attempts = 0
    for _ in range(cfg.vns_iterations):
        k = 1
        while k <= cfg.vns_neighborhood_size and attempts < cfg.vns_attempts:
            attempts += 1
            cand = two_opt(D, _shake(best, k, rng))
            cand_len = _tour_length(D, cand)
            if cand_len < best_len - 1e-12:
                best, best_len, k = cand, cand_len, 1
            else:
                k += 1
    return Tour.from_sequence(best)


def heuristic_solve(inst: Instance, cfg: HeuristicConfig | None = None) -> TourSolution:
    cfg = cfg or HeuristicConfig()
    reps = weber_cluster(inst, cfg).reps
    tour = vns_tour([reps[v] for v in range(len(inst))], cfg)
    return solve_fixed_tour(inst, tour, cfg.subproblem)
