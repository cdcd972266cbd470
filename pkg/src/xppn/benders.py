"""Exact solution by Benders decomposition over tours.

The master picks the tour minimising the maximum of all cuts, the subproblem
prices that tour exactly, and each priced tour ``s`` yields the cut

    P >= d(s) - sum_{e in s} M_e (1 - z_e) + sum_{e not in s} m_e z_e

over undirected edges.  Validity: take the optimal points of any tour ``t``;
on every maximal path shared by ``s`` and ``t`` swap entry and exit points if
the two tours traverse it in opposite directions, which keeps inner costs and
coverage.  Shared edges then cost the same in both tours, edges of ``s`` only
cost at most ``M_e`` and edges of ``t`` only at least ``m_e``.

The master is solved combinatorially: exhaustive over canonical tours up to
``enum_threshold`` elements, a depth-first branch-and-bound above that.
"""

from __future__ import annotations

import functools
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import BoundsTable, compute_bounds
from .heuristic import HeuristicConfig, heuristic_solve
from .instance import Instance
from .touring import SubproblemConfig, Tour, TourSolution, solve_fixed_tour


class UnsupportedSizeError(ValueError):
    pass


def edge_index(v: int, w: int, n: int) -> int:
    """Position of the undirected edge ``{v, w}`` in row-major upper-triangular order."""
    if v > w:
        v, w = w, v
    return v * n - v * (v + 1) // 2 + (w - v - 1)


def edge_pairs(n: int) -> list[tuple[int, int]]:
    return [(v, w) for v in range(n) for w in range(v + 1, n)]


def _tour_edge_ids(tour: Tour) -> np.ndarray:
    n = len(tour)
    return np.array([edge_index(v, w, n) for v, w in tour.edges()], dtype=np.int64)


@dataclass(frozen=True)
class BendersCut:
    base: float
    coef: np.ndarray  # one entry per undirected edge, see edge_index
    source_tour: Tour | None = None

    def coef_map(self) -> dict:
        n = len(self.source_tour) if self.source_tour else _n_from_edges(len(self.coef))
        return {e: float(self.coef[k]) for k, e in enumerate(edge_pairs(n))}


def _n_from_edges(m: int) -> int:
    return int(round((1 + math.sqrt(1 + 8 * m)) / 2))


def m_cut(bounds: BoundsTable) -> BendersCut:
    n = bounds.n
    coef = np.array([bounds.m_out[v, w] for v, w in edge_pairs(n)])
    return BendersCut(0.0, coef, None)


def make_cut(bounds: BoundsTable, tour: Tour, cost: float) -> BendersCut:
    n = bounds.n
    coef = np.array([bounds.m_out[v, w] for v, w in edge_pairs(n)])
    base = cost
    for v, w in tour.edges():
        k = edge_index(v, w, n)
        coef[k] = bounds.M_out[v, w]
        base -= bounds.M_out[v, w]
    return BendersCut(float(base), coef, tour)


def cut_value(cut: BendersCut, tour: Tour) -> float:
    return float(cut.base + cut.coef[_tour_edge_ids(tour)].sum())


# --------------------------------------------------------------------------
# master problem


@functools.lru_cache(maxsize=16)
def canonical_tours(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All canonical tours in lexicographic order and their edge-id matrix."""
    if n <= 3:
        orders = np.array([list(range(n))], dtype=np.int64)
    else:
        rows = [(0,) + p for p in itertools.permutations(range(1, n)) if p[0] < p[-1]]
        orders = np.array(rows, dtype=np.int64)
    if n < 2:
        return orders, np.zeros((1, 0), dtype=np.int64)
    a, b = orders, np.roll(orders, -1, axis=1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    E = lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)
    return orders, E


@dataclass
class BendersConfig:
    enum_threshold: int = 10
    max_vertices: int = 16
    time_limit: float = 7200.0
    max_iterations: int = 100000
    safety_margin: float = 1e-6
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    subproblem: SubproblemConfig = field(default_factory=SubproblemConfig)
    log: Callable[[str], None] | None = None


class _EnumMaster:
    """Keeps max-over-cuts for every canonical tour, updated one cut at a time."""

    def __init__(self, n: int):
        self.orders, self.E = canonical_tours(n)
        self.value = np.full(len(self.orders), -np.inf)

    def add(self, cut: BendersCut):
        vals = cut.base + cut.coef[self.E].sum(axis=1) if self.E.shape[1] else \
            np.full(len(self.orders), cut.base)
        np.maximum(self.value, vals, out=self.value)

    def solve(self) -> tuple[Tour, float]:
        k = int(np.argmin(self.value))  # first minimiser = lexicographically smallest
        return Tour(tuple(int(v) for v in self.orders[k])), float(self.value[k])


def _bnb_master(cuts: list[BendersCut], n: int) -> tuple[Tour, float]:
    """Depth-first search over paths from element 0 with per-cut lower bounds."""
    K = len(cuts)
    C = np.zeros((K, n, n))
    for k, cut in enumerate(cuts):
        for e, (v, w) in enumerate(edge_pairs(n)):
            C[k, v, w] = C[k, w, v] = cut.coef[e]
    base = np.array([c.base for c in cuts])
    big = np.inf
    best = [big, None]

    def bound(path, acc, left):
        last = path[-1]
        if not left:
            return acc + C[:, last, 0]
        U = sorted(left)
        src = U + [last]
        # each unvisited vertex is entered from an unvisited vertex or the path end
        sub = C[:, src][:, :, U]
        for i, u in enumerate(U):
            sub[:, i, i] = big
        into = sub.min(axis=1).sum(axis=1)
        back = C[:, U, 0].min(axis=1)
        return acc + into + back

    def dfs(path, acc, left):
        lb = float(np.max(base + bound(path, acc, left)))
        if lb >= best[0]:
            return
        if not left:
            if len(path) <= 2 or path[1] < path[-1]:
                best[0], best[1] = lb, tuple(path)
            return
        for u in sorted(left):
            left.remove(u)
            path.append(u)
            dfs(path, acc + C[:, path[-2], u], left)
            path.pop()
            left.add(u)

    dfs([0], np.zeros(K), set(range(1, n)))
    return Tour(best[1]), float(best[0])


def master_solve(cuts: list[BendersCut], inst: Instance, bounds: BoundsTable,
                 cfg: BendersConfig | None = None) -> tuple[Tour, float]:
    """Tour minimising the maximum cut value, with that value."""
    cfg = cfg or BendersConfig()
    n = len(inst)
    if n > cfg.max_vertices:
        raise UnsupportedSizeError(f"{n} elements exceed the master limit of {cfg.max_vertices}")
    if not cuts:
        raise ValueError("master needs at least one cut")
    if n <= cfg.enum_threshold:
        m = _EnumMaster(n)
        for c in cuts:
            m.add(c)
        return m.solve()
    return _bnb_master(cuts, n)


# --------------------------------------------------------------------------
# main loop


@dataclass(frozen=True)
class BendersResult:
    best: TourSolution
    lower_bound: float
    upper_bound: float
    iterations: int
    cuts: tuple
    status: str
    wall_time: float
    heuristic: TourSolution
    heuristic_time: float
    heuristic_cuts: bool = False
    lb_history: tuple = ()
    ub_history: tuple = ()
    log: tuple = ()

    @property
    def gap(self) -> float:
        return self.upper_bound - self.lower_bound

    @property
    def gap_percent(self) -> float:
        return 100.0 * max(0.0, self.gap) / self.upper_bound if self.upper_bound > 0 else 0.0


def default_eps(ub0: float) -> float:
    return 1e-4 * (1.0 + abs(ub0))


def benders_solve(inst: Instance, eps: float | None = None, cfg: BendersConfig | None = None,
                  bounds: BoundsTable | None = None, relative: bool = False) -> BendersResult:
    """Run the cut loop until ``UB - LB <= eps``.

    ``eps`` is absolute unless ``relative`` is set, in which case it scales with
    ``1 + UB`` of the warm start; the default is ``1e-4`` relative.
    """
    cfg = cfg or BendersConfig()
    if eps is not None and eps < 0:
        raise ValueError("eps must be non-negative")
    n = len(inst)
    if n > cfg.max_vertices:
        raise UnsupportedSizeError(f"{n} elements exceed the master limit of {cfg.max_vertices}")
    t0 = time.monotonic()
    bounds = bounds or compute_bounds(inst)
    heur = heuristic_solve(inst, cfg.heuristic)
    heur_time = time.monotonic() - t0
    eps_default = default_eps(heur.cost)
    if eps is None:
        eps = eps_default
    elif relative:
        eps = eps * (1.0 + abs(heur.cost))

    lines: list[str] = []

    def log(it, lb, ub, tour, ncuts):
        gap = ub - lb
        s = (f"{it}, {lb:.10g}, {ub:.10g}, {gap:.6g}, {'-'.join(map(str, tour.order))}, "
             f"{ncuts}, {time.monotonic() - t0:.3f}")
        lines.append(s)
        if cfg.log:
            cfg.log(s)

    approx = heur.approximate

    def cut_for(sol: TourSolution) -> BendersCut:
        cost = sol.cost - cfg.safety_margin if sol.approximate else sol.cost
        return make_cut(bounds, sol.tour, cost)

    cuts = [m_cut(bounds), cut_for(heur)]
    priced = {heur.tour: heur}
    enum = n <= cfg.enum_threshold
    master = _EnumMaster(n) if enum else None
    if enum:
        for c in cuts:
            master.add(c)
    best, lb, ub = heur, 0.0, heur.cost
    lbs, ubs = [lb], [ub]
    log(0, lb, ub, heur.tour, len(cuts))
    status = "time_limit"
    it = 0
    while it < cfg.max_iterations:
        if ub - lb <= eps:
            status = "optimal" if eps <= eps_default * (1 + 1e-12) else "gap_limit"
            break
        if time.monotonic() - t0 > cfg.time_limit:
            break
        it += 1
        tour, val = master.solve() if enum else master_solve(cuts, inst, bounds, cfg)
        lb = max(lb, val)
        if tour in priced:
            # the cut of this tour already forces val >= its cost >= ub
            lbs.append(lb)
            ubs.append(ub)
            log(it, lb, ub, tour, len(cuts))
            if ub - lb > eps:
                # only reachable within solver noise or the safety margin
                status = "gap_limit"
                break
            continue
        sol = solve_fixed_tour(inst, tour, cfg.subproblem)
        approx = approx or sol.approximate
        priced[tour] = sol
        cut = cut_for(sol)
        cuts.append(cut)
        if enum:
            master.add(cut)
        if sol.cost < ub:
            best, ub = sol, sol.cost
        assert lb >= lbs[-1] and ub <= ubs[-1], "bounds moved the wrong way"
        lbs.append(lb)
        ubs.append(ub)
        log(it, lb, ub, tour, len(cuts))
    if lb >= ub - 1e-12 * (1.0 + abs(ub)):
        lb = ub  # cut sums agree with the priced cost up to round-off
    lb = min(lb, ub)
    return BendersResult(best, lb, ub, it, tuple(cuts), status, time.monotonic() - t0, heur,
                         heur_time, approx, tuple(lbs), tuple(ubs), tuple(lines))
