"""Fixed-tour subproblem: best entry/exit points for a given visiting order.

Orientation: the tour edge ``v -> w`` costs ``||exit[v] - entry[w]||`` and
element ``v`` adds ``f_v * ||exit[v] - entry[v]||``.  In the model naming
``x1`` is the exit (departure) point and ``x2`` the entry (arrival) point,
and ``lam[v] = (lam1, lam2)`` follows the same order.

With every element convex the subproblem is a single second-order cone
program.  Chains and unions are nonconvex; they are handled by a depth-first
branch-and-bound whose branches fix, per element, a discrete option (chain:
the two segments holding the points plus the traversal direction; union: the
member holding each point).  Open elements are relaxed to their convex hull
(chains: hull of the breakpoints plus a lower bound on the inner distance;
unions: perspective hull of the members), so every node gives a valid lower
bound.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from ._conic import ConicProgram
from .bounds import collapse_hints
from .instance import Instance, fmt


class FeasibilityError(ValueError):
    """A point lies outside its element or a chain misses its coverage."""


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"tour {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    @classmethod
    def from_sequence(cls, seq) -> "Tour":
        """Canonical form: rotate to start at the smallest index, then pick the
        direction whose second element is the smaller neighbour."""
        seq = [int(v) for v in seq]
        k = seq.index(min(seq))
        seq = seq[k:] + seq[:k]
        if len(seq) > 2 and seq[1] > seq[-1]:
            seq = [seq[0]] + seq[:0:-1]
        return cls(tuple(seq))

    @property
    def is_canonical(self) -> bool:
        return Tour.from_sequence(self.order) == self

    def __len__(self):
        return len(self.order)

    def edges(self) -> list[tuple[int, int]]:
        """Directed consecutive pairs, closing edge included (none for one element)."""
        n = len(self.order)
        if n < 2:
            return []
        return [(self.order[i], self.order[(i + 1) % n]) for i in range(n)]

    def undirected_edges(self) -> list[tuple[int, int]]:
        return [(min(v, w), max(v, w)) for v, w in self.edges()]

    def reversed(self) -> "Tour":
        return Tour(tuple(self.order[:1] + self.order[:0:-1]))


@dataclass(frozen=True)
class TourSolution:
    tour: Tour
    entry: dict
    exit: dict
    lam: dict
    cost: float
    out_costs: dict
    in_costs: dict
    status: str = "optimal"
    history: tuple = ()  # incumbent costs in the order they were found
    nodes: int = 0

    @property
    def approximate(self) -> bool:
        return self.status == "approximate"


@dataclass
class SubproblemConfig:
    tol: float = 1e-9  # relative optimality gap of the branch-and-bound
    solver_tol: float = 1e-10
    node_limit: int = 20000
    time_limit: float | None = None
    snap_boundary: bool = True
    feas_tol: float = 1e-6


# --------------------------------------------------------------------------
# evaluation


def _chain_lambdas(elem: geo.Chain, p_exit, p_entry, lam):
    if lam is not None:
        return float(lam[0]), float(lam[1])
    return geo.chain_param(elem, p_exit), geo.chain_param(elem, p_entry)


def evaluate(inst: Instance, tour: Tour, entry, exit, lam=None, tol: float = 1e-6,
             status: str = "evaluated", history=(), nodes: int = 0) -> TourSolution:
    """Assemble the objective for given points, checking feasibility within ``tol``."""
    if len(tour) != len(inst):
        raise ValueError("tour and instance sizes differ")
    lam = dict(lam or {})
    entry = {v: geo._as_point(entry[v]) for v in range(len(inst))}
    exit_ = {v: geo._as_point(exit[v]) for v in range(len(inst))}
    lam_out = {}
    for v, e in enumerate(inst.elements):
        for tag, p in (("entry", entry[v]), ("exit", exit_[v])):
            if not geo.contains(e, p, tol):
                raise FeasibilityError(f"{tag} point of element {v} lies outside it")
        if isinstance(e, geo.Chain):
            l1, l2 = _chain_lambdas(e, exit_[v], entry[v], lam.get(v))
            if abs(l1 - l2) < e.coverage * e.n_segments - tol:
                raise FeasibilityError(f"chain {v} covers {abs(l1 - l2):.6g} < "
                                       f"{e.coverage * e.n_segments:.6g}")
            lam_out[v] = (l1, l2)
    out_costs = {(v, w): math.dist(exit_[v], entry[w]) for v, w in tour.edges()}
    in_costs = {v: e.discount * math.dist(exit_[v], entry[v]) for v, e in enumerate(inst.elements)}
    cost = math.fsum(out_costs.values()) + math.fsum(in_costs.values())
    return TourSolution(tour, entry, exit_, lam_out, cost, out_costs, in_costs, status,
                        tuple(history), nodes)


# --------------------------------------------------------------------------
# discrete options of the nonconvex elements


def _needed_gap(chain: geo.Chain) -> float:
    c = chain.coverage * chain.n_segments
    return 0.0 if c <= 1e-15 else c


def _chain_options(chain: geo.Chain, collapsed: bool) -> list[tuple]:
    """``(j_exit, j_entry, direction)`` cells (segments 1-based) that can meet the coverage.

    ``direction`` +1 means ``lam2 - lam1 >= c``, -1 the reverse, 0 no constraint.
    """
    n = chain.n_segments
    if collapsed:
        return [(j, j, 0) for j in range(1, n + 1)]
    c = _needed_gap(chain)
    if c == 0.0:
        return [(j1, j2, 0) for j1 in range(1, n + 1) for j2 in range(1, n + 1)]
    out = []
    for j1 in range(1, n + 1):
        for j2 in range(1, n + 1):
            if j2 - (j1 - 1) >= c:
                out.append((j1, j2, 1))
            if j1 - (j2 - 1) >= c:
                out.append((j1, j2, -1))
    return out


def _union_options(union: geo.UnionSoc, collapsed: bool) -> list[tuple]:
    m = len(union.members)
    if collapsed:
        return [(i, i) for i in range(m)]
    return list(itertools.product(range(m), range(m)))


def _collapsible(elem) -> bool:
    if elem.discount < 1.0:
        return False
    if isinstance(elem, geo.Chain):
        return _needed_gap(elem) == 0.0
    return True


class _Vars:
    def __init__(self):
        self.entry: dict = {}
        self.exit: dict = {}
        self.lam: dict = {}
        self.inner: dict = {}


def _union_hull_point(prog: ConicProgram, xv, members) -> None:
    thetas = []
    sums = [{xv[0]: 1.0}, {xv[1]: 1.0}]
    for m in members:
        th = prog.var(0.0, 1.0)
        y = (prog.var(), prog.var())
        geo.add_membership(prog, m.socset(), y, scale=th)
        thetas.append(th)
        sums[0][y[0]] = -1.0
        sums[1][y[1]] = -1.0
    prog.add_eq({t: 1.0 for t in thetas}, 1.0)
    for s in sums:
        prog.add_eq(s, 0.0)


def _segment_point(prog: ConicProgram, xv, chain: geo.Chain, j: int, scale: int | None = None) -> int:
    """Tie ``xv`` to segment ``j`` through its parameter; returns the lambda variable.

    With ``scale`` (a weight ``theta``) the perspective version is imposed:
    ``x = theta a + (lam - (j-1) theta)(b - a)`` with ``lam`` in ``theta [j-1, j]``.
    """
    a = np.asarray(chain.breakpoints[j - 1])
    b = np.asarray(chain.breakpoints[j])
    if scale is None:
        lam = prog.var(j - 1.0, float(j))
        for d in range(2):
            prog.add_eq({xv[d]: 1.0, lam: -(b[d] - a[d])}, a[d] - (j - 1) * (b[d] - a[d]))
        return lam
    lam = prog.var()
    prog.add_ge({lam: 1.0, scale: -(j - 1.0)}, 0.0)
    prog.add_le({lam: 1.0, scale: -float(j)}, 0.0)
    for d in range(2):
        prog.add_eq({xv[d]: 1.0, lam: -(b[d] - a[d]), scale: (j - 1) * (b[d] - a[d]) - a[d]}, 0.0)
    return lam


def _coverage_row(prog, l1, l2, direction, c, scale=None):
    if direction == 0:
        return
    terms = {l2: float(direction), l1: -float(direction)}
    if scale is None:
        prog.add_ge(terms, c)
    else:
        terms[scale] = -c
        prog.add_ge(terms, 0.0)


def _chain_hull(prog: ConicProgram, chain: geo.Chain, cells, xe, xn, inner) -> None:
    """Convex hull of the union of the chain's cells (one perspective copy per cell).

    ``xe``/``xn`` are the exit/entry variables (``xn`` None when collapsed);
    ``inner`` is the inner-distance variable, bounded below by the sum of the
    per-cell distances.
    """
    c = _needed_gap(chain)
    thetas, inner_terms = [], {}
    sums = {xe[0]: {xe[0]: 1.0}, xe[1]: {xe[1]: 1.0}}
    if xn is not None:
        sums[xn[0]] = {xn[0]: 1.0}
        sums[xn[1]] = {xn[1]: 1.0}
    for j1, j2, direction in cells:
        th = prog.var(0.0, 1.0)
        thetas.append(th)
        y1 = (prog.var(), prog.var())
        l1 = _segment_point(prog, y1, chain, j1, scale=th)
        sums[xe[0]][y1[0]] = -1.0
        sums[xe[1]][y1[1]] = -1.0
        if xn is None:
            continue
        y2 = (prog.var(), prog.var())
        l2 = _segment_point(prog, y2, chain, j2, scale=th)
        sums[xn[0]][y2[0]] = -1.0
        sums[xn[1]][y2[1]] = -1.0
        _coverage_row(prog, l1, l2, direction, c, scale=th)
        if inner is not None:
            s = prog.var(0.0)
            prog.add_norm_le(s, y1, y2)
            inner_terms[s] = -1.0
    prog.add_eq({t: 1.0 for t in thetas}, 1.0)
    for terms in sums.values():
        prog.add_eq(terms, 0.0)
    if inner_terms:
        inner_terms[inner] = 1.0
        prog.add_ge(inner_terms, 0.0)


def _build(inst: Instance, tour: Tour, collapse: list[bool], assign: dict,
           options: dict) -> tuple[ConicProgram, _Vars]:
    prog = ConicProgram()
    V = _Vars()
    for v, e in enumerate(inst.elements):
        p = (prog.var(), prog.var())
        V.exit[v] = p
        if collapse[v]:
            V.entry[v] = p
        else:
            q = (prog.var(), prog.var())
            V.entry[v] = q
            if e.discount > 0:
                s = prog.var(0.0)
                prog.add_norm_le(s, p, q)
                prog.cost[s] = e.discount
                V.inner[v] = s
    for v, w in tour.edges():
        t = prog.var(0.0)
        prog.add_norm_le(t, V.exit[v], V.entry[w])
        prog.cost[t] = prog.cost.get(t, 0.0) + 1.0

    for v, e in enumerate(inst.elements):
        pts = [V.exit[v]] if collapse[v] else [V.exit[v], V.entry[v]]
        opt = assign.get(v)
        if geo.is_convex(e):
            ss = e.socset()
            for xv in pts:
                geo.add_membership(prog, ss, xv)
        elif isinstance(e, geo.UnionSoc):
            if opt is None:
                for xv in pts:
                    _union_hull_point(prog, xv, e.members)
            else:
                for xv, i in zip(pts, opt):
                    geo.add_membership(prog, e.members[i].socset(), xv)
        elif opt is None:
            _chain_hull(prog, e, options[v], V.exit[v], None if collapse[v] else V.entry[v],
                        V.inner.get(v))
        else:
            j1, j2, direction = opt
            l1 = _segment_point(prog, V.exit[v], e, j1)
            l2 = l1 if collapse[v] else _segment_point(prog, V.entry[v], e, j2)
            V.lam[v] = (l1, l2)
            _coverage_row(prog, l1, l2, direction, _needed_gap(e))
    return prog, V


# --------------------------------------------------------------------------
# extracting and cleaning node solutions


def _relaxed_violation(inst, collapse, assign, V, x) -> dict:
    """Distance of each open nonconvex element's relaxed points to the true set."""
    out = {}
    for v, e in enumerate(inst.elements):
        if geo.is_convex(e) or v in assign:
            continue
        pe, px = x[list(V.entry[v])], x[list(V.exit[v])]
        viol = max(math.dist(pe, geo.project(e, pe)), math.dist(px, geo.project(e, px)))
        if isinstance(e, geo.Chain) and viol <= 1e-9:
            l1, l2 = geo.chain_param(e, px), geo.chain_param(e, pe)
            viol = max(viol, _needed_gap(e) - abs(l1 - l2))
        out[v] = viol
    return out


def _clean(inst, tour, collapse, assign, V, x, cfg, status, history, nodes):
    """Snap node points exactly into their sets and evaluate the true cost."""
    entry, exit_, lam = {}, {}, {}
    for v, e in enumerate(inst.elements):
        px = x[list(V.exit[v])]
        pe = x[list(V.entry[v])]
        if isinstance(e, geo.Chain):
            if v in assign:
                j1, j2, direction = assign[v]
                l1 = min(float(j1), max(j1 - 1.0, float(x[V.lam[v][0]])))
                l2 = min(float(j2), max(j2 - 1.0, float(x[V.lam[v][1]])))
                c = _needed_gap(e)
                short = c - abs(l1 - l2)
                if direction != 0 and short > 0:
                    # push the entry parameter outward to restore exact coverage
                    l2 = min(float(j2), max(j2 - 1.0, l2 + direction * short))
            else:
                l1, l2 = geo.chain_param(e, px), geo.chain_param(e, pe)
            lam[v] = (l1, l2)
            exit_[v] = geo.chain_point_at(e, l1)
            entry[v] = geo.chain_point_at(e, l2)
        elif isinstance(e, geo.UnionSoc) and v in assign:
            i1, i2 = assign[v]
            exit_[v] = geo.project(e.members[i1], px)
            entry[v] = exit_[v] if collapse[v] else geo.project(e.members[i2], pe)
        else:
            exit_[v] = geo.project(e, px)
            entry[v] = exit_[v] if collapse[v] else geo.project(e, pe)
    return evaluate(inst, tour, entry, exit_, lam, cfg.feas_tol, status, history, nodes)


def _snap_to_boundary(inst: Instance, sol: TourSolution, collapse) -> TourSolution:
    """Slide interior collapsed points along their (straight) local path to the boundary.

    At an optimum an interior point sits on the segment between its
    neighbours, so moving it along that segment keeps the cost unchanged.
    """
    n = len(inst)
    if n < 2:
        return sol
    entry, exit_ = dict(sol.entry), dict(sol.exit)
    order = sol.tour.order
    cost = sol.cost
    # a move can free a neighbour's move, so repeat until nothing changes
    for _ in range(n):
        moved = False
        for k, v in enumerate(order):
            e = inst[v]
            if not (collapse[v] and geo.is_convex(e)) or isinstance(e, geo.SocRegion):
                continue
            p = np.asarray(exit_[v])
            if geo.boundary_distance(e, p) <= 1e-9:
                continue
            a = np.asarray(exit_[order[k - 1]])
            c = np.asarray(entry[order[(k + 1) % n]])
            for target in (a, c):
                if geo.contains(e, target):
                    continue
                lo, hi = 0.0, 1.0  # p + t (target - p): inside at lo, outside at hi
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if geo.contains(e, p + mid * (target - p)):
                        lo = mid
                    else:
                        hi = mid
                q = geo._as_point(p + lo * (target - p))
                trial_entry, trial_exit = dict(entry), dict(exit_)
                trial_entry[v] = trial_exit[v] = q
                trial = evaluate(inst, sol.tour, trial_entry, trial_exit, sol.lam, 1e-6)
                if trial.cost <= cost + 1e-12 * (1.0 + cost):
                    entry, exit_, cost = trial_entry, trial_exit, trial.cost
                    moved = True
                    break
        if not moved:
            break
    if cost == sol.cost and entry == sol.entry:
        return sol
    return evaluate(inst, sol.tour, entry, exit_, sol.lam, 1e-6, sol.status, sol.history,
                    sol.nodes)


def solve_fixed_tour(inst: Instance, tour: Tour, cfg: SubproblemConfig | None = None,
                     collapse: list[bool] | None = None) -> TourSolution:
    """Optimal entry/exit points for ``tour`` (branch-and-bound over nonconvex options)."""
    cfg = cfg or SubproblemConfig()
    if len(tour) != len(inst):
        raise ValueError("tour and instance sizes differ")
    if collapse is None:
        hints = collapse_hints(inst)
        collapse = [h or _collapsible(e) for h, e in zip(hints, inst.elements)]
    options = {}
    for v, e in enumerate(inst.elements):
        if isinstance(e, geo.Chain):
            options[v] = _chain_options(e, collapse[v])
        elif isinstance(e, geo.UnionSoc):
            options[v] = _union_options(e, collapse[v])
    t0 = time.monotonic()
    best: list = [None]  # incumbent TourSolution
    history: list[float] = []
    nodes = [0]
    exhausted = [False]

    def out_of_budget():
        if nodes[0] >= cfg.node_limit:
            return True
        return cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit

    def solve_node(assign):
        nodes[0] += 1
        prog, V = _build(inst, tour, collapse, assign, options)
        res = prog.minimize(tol=cfg.solver_tol)
        return res, V

    def prunable(lb):
        if best[0] is None:
            return False
        inc = best[0].cost
        return lb >= inc - cfg.tol * (1.0 + abs(inc))

    def offer(assign, V, x):
        sol = _clean(inst, tour, collapse, assign, V, x, cfg, "optimal", (), 0)
        if best[0] is None or sol.cost < best[0].cost:
            best[0] = sol
            history.append(sol.cost)

    def dfs(assign, res, V):
        if prunable(res.objective):
            return
        open_ = _relaxed_violation(inst, collapse, assign, V, res.x)
        if all(viol <= 1e-9 for viol in open_.values()):
            offer(assign, V, res.x)
            return
        diving = out_of_budget()
        if diving:
            exhausted[0] = True
            if best[0] is not None:
                return
        v = max(open_, key=lambda k: (open_[k], -k))
        children = []
        for opt in options[v]:
            child = dict(assign)
            child[v] = opt
            cres, cV = solve_node(child)
            if cres.ok:
                children.append((cres.objective, len(children), child, cres, cV))
        children.sort(key=lambda c: (c[0], c[1]))
        for _, _, child, cres, cV in children:
            if out_of_budget():
                exhausted[0] = True
                if best[0] is not None:
                    return
            dfs(child, cres, cV)

    root, V0 = solve_node({})
    if not root.ok:
        raise RuntimeError(f"subproblem relaxation failed ({root.status})")
    dfs({}, root, V0)
    if best[0] is None:
        raise RuntimeError("no feasible point assignment found within the node budget")
    status = "approximate" if exhausted[0] else "optimal"
    sol = best[0]
    sol = TourSolution(sol.tour, sol.entry, sol.exit, sol.lam, sol.cost, sol.out_costs,
                       sol.in_costs, status, tuple(history), nodes[0])
    if cfg.snap_boundary:
        sol = _snap_to_boundary(inst, sol, collapse)
    for a, b in zip(sol.history, sol.history[1:]):
        assert b <= a, "incumbent cost increased"
    return sol


# --------------------------------------------------------------------------
# solution documents


def write_solution(sol: TourSolution) -> str:
    n = len(sol.tour)
    lines = ["{", f'  "status": "{sol.status}",', f'  "cost": {fmt(sol.cost)},',
             f'  "tour": [{", ".join(str(v) for v in sol.tour.order)}],', '  "points": [']
    rows = []
    for v in range(n):
        parts = [f'"element": {v}',
                 f'"entry": [{fmt(sol.entry[v][0])}, {fmt(sol.entry[v][1])}]',
                 f'"exit": [{fmt(sol.exit[v][0])}, {fmt(sol.exit[v][1])}]',
                 f'"inner_cost": {fmt(sol.in_costs[v])}']
        if v in sol.lam:
            parts.append(f'"lambda": [{fmt(sol.lam[v][0])}, {fmt(sol.lam[v][1])}]')
        rows.append("    {" + ", ".join(parts) + "}")
    lines.append(",\n".join(rows))
    lines.append("  ],")
    lines.append('  "edges": [')
    lines.append(",\n".join(f'    {{"from": {v}, "to": {w}, "cost": {fmt(c)}}}'
                            for (v, w), c in sol.out_costs.items()))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def read_solution(text: str, inst: Instance, tol: float = 1e-6) -> TourSolution:
    """Parse a solution document and re-evaluate it against ``inst``."""
    doc = json.loads(text)
    tour = Tour(tuple(doc["tour"]))
    entry, exit_, lam = {}, {}, {}
    for row in doc["points"]:
        v = int(row["element"])
        entry[v], exit_[v] = tuple(row["entry"]), tuple(row["exit"])
        if "lambda" in row:
            lam[v] = tuple(row["lambda"])
    return evaluate(inst, tour, entry, exit_, lam, tol, doc.get("status", "evaluated"))
