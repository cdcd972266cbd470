"""Solver-agnostic mixed-integer conic models of the problem.

Variable names are fixed so assignments can be cross-checked between modules.
Vertices are 0-based, segment/member/stage indices 1-based:

    z_v_w  d_out_v_w  p_v_w  d_in_v  s_v
    x1_v_x x1_v_y x2_v_x x2_v_y        (x1 = exit, x2 = entry)
    lam1_v lam2_v lammax_v lammin_v u_v gam1_v_j mu1_v_j ...   chains
    chi1_v_j chi2_v_j                                          unions
    y_v_t z_v_w_t d_out_v_w_t p_v_w_t d_in_v_t                 stage model

Text format (``export_model``)::

    XPPN-MODEL v1
    NAME <name>
    NOTE <free text>
    COUNTS vars=<a> linear=<b> soc=<c> annot=<d>
    VARS                    one line: name kind lb ub
    LINEAR                  one line: id sense rhs name:coef ...   (names sorted)
    SOC                     one line: id k head_const head_terms ; row_const row_terms ; ...
    OBJ                     one line: const name:coef ...
    ANNOT                   one line: id tag

Reals are written with 17 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import geometry as geo
from .bounds import BoundsTable
from .instance import Instance

KINDS = ("continuous", "binary", "integer")
SENSES = ("<=", "=", ">=")
INF = math.inf


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "continuous"
    lower: float = -INF
    upper: float = INF


@dataclass(frozen=True)
class LinearConstraint:
    id: str
    coefs: dict
    sense: str
    rhs: float


@dataclass(frozen=True)
class SocConstraint:
    """``||(row_1, ..., row_k)|| <= head`` with affine ``(coefs, const)`` pieces."""

    id: str
    head: tuple
    rows: tuple


@dataclass
class Model:
    name: str = "model"
    variables: list = field(default_factory=list)
    linear_constraints: list = field(default_factory=list)
    soc_constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_const: float = 0.0
    annotations: dict = field(default_factory=dict)
    note: str = ""

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def count(self, prefix: str) -> int:
        return sum(1 for v in self.variables if v.name.startswith(prefix))

    def by_tag(self, tag: str) -> list:
        ids = {k for k, t in self.annotations.items() if t == tag}
        return [c for c in self.linear_constraints + self.soc_constraints if c.id in ids]

    def validate(self) -> None:
        names = set()
        for v in self.variables:
            if v.name in names:
                raise ValueError(f"variable {v.name} declared twice")
            names.add(v.name)
            if v.kind not in KINDS:
                raise ValueError(f"variable {v.name} has unknown kind {v.kind}")
            if v.kind == "binary" and (v.lower, v.upper) != (0.0, 1.0):
                raise ValueError(f"binary {v.name} must have bounds [0, 1]")

        def refs(c):
            if isinstance(c, LinearConstraint):
                return c.coefs.keys()
            return [k for piece in (c.head,) + c.rows for k in piece[0]]

        for c in self.linear_constraints + self.soc_constraints:
            missing = [k for k in refs(c) if k not in names]
            if missing:
                raise ValueError(f"constraint {c.id} uses undeclared {missing[0]}")
            if c.id not in self.annotations:
                raise ValueError(f"constraint {c.id} has no annotation")
        for k in self.objective:
            if k not in names:
                raise ValueError(f"objective uses undeclared {k}")


class _Builder:
    def __init__(self, name: str):
        self.m = Model(name)
        self._names: set[str] = set()

    def var(self, name, kind="continuous", lb=-INF, ub=INF) -> str:
        if kind == "binary":
            lb, ub = 0.0, 1.0
        self.m.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._names.add(name)
        return name

    def lin(self, coefs: dict, sense: str, rhs: float, tag: str) -> None:
        cid = f"L{len(self.m.linear_constraints)}"
        clean = {k: float(v) for k, v in coefs.items() if v != 0}
        self.m.linear_constraints.append(LinearConstraint(cid, clean, sense, float(rhs)))
        self.m.annotations[cid] = tag

    def soc(self, head, rows, tag: str) -> None:
        cid = f"S{len(self.m.soc_constraints)}"

        def aff(piece):
            return ({k: float(v) for k, v in piece[0].items() if v != 0}, float(piece[1]))

        self.m.soc_constraints.append(SocConstraint(cid, aff(head), tuple(aff(r) for r in rows)))
        self.m.annotations[cid] = tag


def _pt(i: int, v: int) -> tuple[str, str]:
    return f"x{i}_{v}_x", f"x{i}_{v}_y"


# --------------------------------------------------------------------------
# shared blocks


def _add_socset(b: _Builder, ss: geo.SocSet, xv, tag: str, slack: tuple[str, float] | None = None):
    """Membership rows; ``slack = (chi, M)`` relaxes every row by ``M (1 - chi)``."""
    for row in ss.rows:
        head = {xv[0]: row.c[0], xv[1]: row.c[1]}
        const = row.d
        if slack is not None:
            chi, big = slack
            head[chi] = head.get(chi, 0.0) - big
            const += big
        if row.is_linear:
            # 0 <= c.x + d
            b.lin(head, ">=", -const, tag)
        else:
            rows = [({xv[0]: row.B[k][0], xv[1]: row.B[k][1]}, row.b[k]) for k in range(2)]
            b.soc((head, const), rows, tag)


def _union_big_m(union: geo.UnionSoc) -> list[list[float]]:
    """Per member and row, the largest row residual over the union's bounding box."""
    x0, y0, x1, y1 = geo.bounding_box(union)
    corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
    out = []
    for m in union.members:
        out.append([max(0.0, max(r.residual(c) for c in corners)) for r in m.socset().rows])
    return out


def _add_domain(b: _Builder, inst: Instance) -> None:
    """Point variables plus the membership systems of every element."""
    for v, e in enumerate(inst.elements):
        for i in (1, 2):
            for name in _pt(i, v):
                b.var(name)
        if geo.is_convex(e):
            ss = e.socset()
            for i in (1, 2):
                _add_socset(b, ss, _pt(i, v), "C-C")
        elif isinstance(e, geo.UnionSoc):
            bigs = _union_big_m(e)
            for i in (1, 2):
                chis = [b.var(f"chi{i}_{v}_{j + 1}", "binary") for j in range(len(e.members))]
                for j, m in enumerate(e.members):
                    for row, big in zip(m.socset().rows, bigs[j]):
                        _add_socset(b, geo.SocSet((row,)), _pt(i, v), "U-C", (chis[j], big))
                b.lin({c: 1.0 for c in chis}, "=", 1.0, "U-C")
        else:
            _add_chain(b, v, e)


def _add_chain(b: _Builder, v: int, chain: geo.Chain) -> None:
    n = chain.n_segments
    A = np.asarray(chain.breakpoints)
    big = n + 1.0
    for i in (1, 2):
        lam = b.var(f"lam{i}_{v}", lb=0.0, ub=float(n))
        gam = [b.var(f"gam{i}_{v}_{j}", lb=0.0, ub=1.0) for j in range(1, n + 2)]
        mu = [b.var(f"mu{i}_{v}_{j}", "binary") for j in range(1, n + 1)]
        for j in range(1, n + 1):
            # on segment j: lam = (j - 1) + weight of breakpoint j + 1
            row = {lam: 1.0, gam[j]: -1.0, mu[j - 1]: -big}
            b.lin(row, ">=", (j - 1) - big, "P-C")
            row = {lam: 1.0, gam[j]: -1.0, mu[j - 1]: big}
            b.lin(row, "<=", (j - 1) + big, "P-C")
        b.lin({gam[0]: 1.0, mu[0]: -1.0}, "<=", 0.0, "P-C")
        for j in range(2, n + 1):
            b.lin({gam[j - 1]: 1.0, mu[j - 2]: -1.0, mu[j - 1]: -1.0}, "<=", 0.0, "P-C")
        b.lin({gam[n]: 1.0, mu[n - 1]: -1.0}, "<=", 0.0, "P-C")
        b.lin({m: 1.0 for m in mu}, "=", 1.0, "P-C")
        b.lin({g: 1.0 for g in gam}, "=", 1.0, "P-C")
        xv = _pt(i, v)
        for d in range(2):
            row = {xv[d]: 1.0}
            for j, g in enumerate(gam):
                row[g] = -A[j, d]
            b.lin(row, "=", 0.0, "P-C")
    lmax = b.var(f"lammax_{v}", lb=0.0, ub=float(n))
    lmin = b.var(f"lammin_{v}", lb=0.0, ub=float(n))
    u = b.var(f"u_{v}", "binary")
    b.lin({f"lam1_{v}": 1.0, f"lam2_{v}": -1.0, lmax: -1.0, lmin: 1.0}, "=", 0.0, "alpha-C")
    b.lin({lmax: 1.0, lmin: 1.0}, ">=", chain.coverage * n, "alpha-C")
    b.lin({lmax: 1.0, u: float(n)}, "<=", float(n), "alpha-C")
    b.lin({lmin: 1.0, u: -float(n)}, "<=", 0.0, "alpha-C")


def _add_inner(b: _Builder, inst: Instance, bounds: BoundsTable) -> None:
    for v, e in enumerate(inst.elements):
        d = b.var(f"d_in_{v}", lb=0.0)
        x1, x2 = _pt(1, v), _pt(2, v)
        b.soc(({d: 1.0}, 0.0), [({x1[k]: 1.0, x2[k]: -1.0}, 0.0) for k in range(2)], "D2")
        b.lin({d: 1.0}, "<=", float(bounds.M_in[v]), "VI: d <= M")
        if e.discount:
            b.m.objective[d] = b.m.objective.get(d, 0.0) + e.discount


def _add_outer(b: _Builder, bounds: BoundsTable, pairs) -> None:
    """Distance, product and McCormick rows for the given ordered pairs."""
    for v, w in pairs:
        z, d, p = f"z_{v}_{w}", f"d_out_{v}_{w}", f"p_{v}_{w}"
        b.var(d, lb=0.0)
        b.var(p, lb=0.0)
        x1, x2 = _pt(1, v), _pt(2, w)
        b.soc(({d: 1.0}, 0.0), [({x1[k]: 1.0, x2[k]: -1.0}, 0.0) for k in range(2)], "D1")
        M, m = float(bounds.M_out[v, w]), float(bounds.m_out[v, w])
        b.lin({p: 1.0, d: -1.0, z: -M}, ">=", -M, "LIN-Mc")
        b.lin({p: 1.0, z: -m}, ">=", 0.0, "VI: p >= m z")
        b.m.objective[p] = 1.0


def _directed_pairs(n: int):
    return [(v, w) for v in range(n) for w in range(n) if v != w]


def _assignment_rows(b: _Builder, n: int) -> None:
    for v in range(n):
        b.lin({f"z_{v}_{w}": 1.0 for w in range(n) if w != v}, "=", 1.0, "C1")
    for v in range(n):
        b.lin({f"z_{w}_{v}": 1.0 for w in range(n) if w != v}, "=", 1.0, "C2")


# --------------------------------------------------------------------------
# formulations


def build_mtz(inst: Instance, bounds: BoundsTable) -> Model:
    """Compact order-variable formulation.

    Deviations from the printed rows, all needed for valid tours to be
    feasible: the ordering row is skipped for arcs returning to element 0,
    the ``2 <= s`` bounds skip element 0, and the first lifted row is the
    Desrochers-Laporte form ``s_v - s_w + n z_vw + (n-2) z_wv <= n-1``.
    """
    n = len(inst)
    b = _Builder(f"mtz:{inst.name}")
    b.m.note = ("subtours excluded by order variables; the LP relaxation with all subtour "
                "rows is contained in this one")
    for v, w in _directed_pairs(n):
        b.var(f"z_{v}_{w}", "binary")
    for v in range(n):
        b.var(f"s_{v}", "integer", 1.0, float(n))
    _add_outer(b, bounds, _directed_pairs(n))
    _add_inner(b, inst, bounds)
    _assignment_rows(b, n)
    for v, w in _directed_pairs(n):
        if w != 0:
            b.lin({f"z_{v}_{w}": float(n), f"s_{v}": 1.0, f"s_{w}": -1.0}, "<=", n - 1.0, "MTZ1")
    b.lin({"s_0": 1.0}, "=", 1.0, "MTZ2")
    for v in range(1, n):
        b.lin({f"s_{v}": 1.0}, ">=", 2.0, "MTZ3")
        b.lin({f"s_{v}": 1.0}, "<=", float(n), "MTZ3")
    for v, w in _directed_pairs(n):
        if w != 0:
            row = {f"s_{v}": 1.0, f"s_{w}": -1.0, f"z_{v}_{w}": float(n), f"z_{w}_{v}": n - 2.0}
            b.lin(row, "<=", n - 1.0, "MTZ4 (lifted)")
    for v, w in _directed_pairs(n):
        if v != 0:
            b.lin({f"s_{v}": 1.0, f"s_{w}": -1.0, f"z_{w}_{v}": n - 2.0}, "<=", n - 1.0, "MTZ5")
    _add_domain(b, inst)
    b.m.validate()
    return b.m


def build_sec(inst: Instance, bounds: BoundsTable, symmetric: bool = False) -> tuple[Model, str]:
    """Assignment (or degree-2) model whose subtour rows are left to :func:`separate_sec`."""
    n = len(inst)
    b = _Builder(f"{'ssec' if symmetric else 'sec'}:{inst.name}")
    note = ("subtour elimination rows are not materialised; integral solutions must be "
            "checked with separate_sec and violated subsets added lazily")
    if symmetric:
        note += ("; undirected edges use d_out_v_w >= ||x1_v - x2_w|| for v < w, exact when "
                 "entry and exit points coincide")
        pairs = [(v, w) for v in range(n) for w in range(v + 1, n)]
        for v, w in pairs:
            b.var(f"z_{v}_{w}", "binary")
        _add_outer(b, bounds, pairs)
        _add_inner(b, inst, bounds)
        for v in range(n):
            row = {f"z_{min(v, w)}_{max(v, w)}": 1.0 for w in range(n) if w != v}
            b.lin(row, "=", 2.0, "sSEC degree")
    else:
        for v, w in _directed_pairs(n):
            b.var(f"z_{v}_{w}", "binary")
        _add_outer(b, bounds, _directed_pairs(n))
        _add_inner(b, inst, bounds)
        _assignment_rows(b, n)
    _add_domain(b, inst)
    b.m.note = note
    b.m.validate()
    return b.m, note


@dataclass(frozen=True)
class HorizonParams:
    """Stage-dependent data: ``beta_out[t, v, w]``, ``beta_in[t, v]``, ``discount[t, v]``."""

    beta_out: np.ndarray
    beta_in: np.ndarray
    discount: np.ndarray

    @classmethod
    def constant(cls, inst: Instance) -> "HorizonParams":
        n = len(inst)
        f = np.array([e.discount for e in inst.elements])
        return cls(np.ones((n, n, n)), np.ones((n, n)), np.tile(f, (n, 1)))


def build_time_dependent(inst: Instance, bounds: BoundsTable,
                         horizon: HorizonParams | None = None) -> Model:
    """Stage-indexed model over ``t = 1..n``.

    The closing arc from the last stage back to the first is part of the
    stage links, and each stage's inner cost is tied to its element through
    ``y``, so objective values match the other models.  Products of distances
    and arc variables are linearised with the same big-M pattern.
    """
    n = len(inst)
    H = horizon or HorizonParams.constant(inst)
    T = n
    b = _Builder(f"time:{inst.name}")
    b.m.note = "stage products linearised with McCormick rows; stage n links back to stage 1"
    for v in range(n):
        for t in range(1, T + 1):
            b.var(f"y_{v}_{t}", "binary")
    for v, w in _directed_pairs(n):
        for t in range(1, T + 1):
            b.var(f"z_{v}_{w}_{t}", "binary")
    for t in range(1, T + 1):
        b.lin({f"y_{v}_{t}": 1.0 for v in range(n)}, "=", 1.0, "TD: one element per stage")
    for v in range(n):
        b.lin({f"y_{v}_{t}": 1.0 for t in range(1, T + 1)}, "=", 1.0, "TD: one stage per element")
    for v, w in _directed_pairs(n):
        for t in range(1, T + 1):
            nxt = t % T + 1
            b.lin({f"y_{v}_{t}": 1.0, f"y_{w}_{nxt}": 1.0, f"z_{v}_{w}_{t}": -1.0}, "<=", 1.0,
                  "TD: stage link")
    for v, w in _directed_pairs(n):
        x1, x2 = _pt(1, v), _pt(2, w)
        M = float(bounds.M_out[v, w])
        for t in range(1, T + 1):
            beta = float(H.beta_out[t - 1, v, w])
            d, p, z = f"d_out_{v}_{w}_{t}", f"p_{v}_{w}_{t}", f"z_{v}_{w}_{t}"
            b.var(d, lb=0.0)
            b.var(p, lb=0.0)
            b.soc(({d: 1.0}, 0.0), [({x1[k]: beta, x2[k]: -beta}, 0.0) for k in range(2)],
                  "TD: outer distance")
            b.lin({p: 1.0, d: -1.0, z: -beta * M}, ">=", -beta * M, "TD: LIN-Mc")
            b.m.objective[p] = 1.0
    for v in range(n):
        d = b.var(f"d_in_{v}", lb=0.0)
        x1, x2 = _pt(1, v), _pt(2, v)
        b.soc(({d: 1.0}, 0.0), [({x1[k]: 1.0, x2[k]: -1.0}, 0.0) for k in range(2)], "D2")
        b.lin({d: 1.0}, "<=", float(bounds.M_in[v]), "VI: d <= M")
        for t in range(1, T + 1):
            beta = float(H.beta_in[t - 1, v])
            dt = b.var(f"d_in_{v}_{t}", lb=0.0)
            big = beta * float(bounds.M_in[v])
            b.lin({dt: 1.0, d: -beta, f"y_{v}_{t}": -big}, ">=", -big, "TD: inner distance")
            f = float(H.discount[t - 1, v])
            if f:
                b.m.objective[dt] = f
    _add_domain(b, inst)
    b.m.validate()
    return b.m


# --------------------------------------------------------------------------
# checking


@dataclass(frozen=True)
class Violation:
    constraint: str  # constraint id or variable name
    tag: str
    kind: str  # bound | integrality | linear | soc
    amount: float


def _aff(piece, a) -> float:
    coefs, const = piece
    return const + math.fsum(c * a[k] for k, c in coefs.items())


def objective_value(model: Model, assignment: dict) -> float:
    return model.objective_const + math.fsum(c * assignment[k] for k, c in model.objective.items())


def check_assignment(model: Model, assignment: dict, tol: float = 1e-6) -> list[Violation]:
    """All bound, integrality, linear and cone violations larger than ``tol``."""
    missing = [v.name for v in model.variables if v.name not in assignment]
    if missing:
        raise geo.DomainError(f"assignment misses variable {missing[0]}")
    out = []
    for var in model.variables:
        x = float(assignment[var.name])
        over = max(var.lower - x, x - var.upper)
        if over > tol:
            out.append(Violation(var.name, "bounds", "bound", over))
        if var.kind != "continuous" and abs(x - round(x)) > tol:
            out.append(Violation(var.name, "integrality", "integrality", abs(x - round(x))))
    for c in model.linear_constraints:
        lhs = _aff((c.coefs, 0.0), assignment)
        r = {"<=": lhs - c.rhs, ">=": c.rhs - lhs, "=": abs(lhs - c.rhs)}[c.sense]
        if r > tol:
            out.append(Violation(c.id, model.annotations[c.id], "linear", r))
    for c in model.soc_constraints:
        r = math.hypot(*[_aff(row, assignment) for row in c.rows]) - _aff(c.head, assignment)
        if r > tol:
            out.append(Violation(c.id, model.annotations[c.id], "soc", r))
    return out


# --------------------------------------------------------------------------
# solutions as assignments


def _domain_values(inst: Instance, sol) -> dict:
    a = {}
    for v, e in enumerate(inst.elements):
        for i, p in ((1, sol.exit[v]), (2, sol.entry[v])):
            a[f"x{i}_{v}_x"], a[f"x{i}_{v}_y"] = float(p[0]), float(p[1])
        if isinstance(e, geo.Chain):
            n = e.n_segments
            lams = sol.lam[v]
            for i, lam in zip((1, 2), lams):
                j = min(int(math.floor(lam)) + 1, n)
                g = lam - (j - 1)
                a[f"lam{i}_{v}"] = float(lam)
                for k in range(1, n + 2):
                    a[f"gam{i}_{v}_{k}"] = 0.0
                for k in range(1, n + 1):
                    a[f"mu{i}_{v}_{k}"] = 1.0 if k == j else 0.0
                a[f"gam{i}_{v}_{j}"] = 1.0 - g
                a[f"gam{i}_{v}_{j + 1}"] = g
            diff = lams[0] - lams[1]
            a[f"lammax_{v}"] = max(diff, 0.0)
            a[f"lammin_{v}"] = max(-diff, 0.0)
            a[f"u_{v}"] = 0.0 if diff >= 0 else 1.0
        elif isinstance(e, geo.UnionSoc):
            for i, p in ((1, sol.exit[v]), (2, sol.entry[v])):
                worst = [max(r.residual(p) for r in m.socset().rows) for m in e.members]
                j = int(np.argmin(worst))
                for k in range(len(e.members)):
                    a[f"chi{i}_{v}_{k + 1}"] = 1.0 if k == j else 0.0
        a[f"d_in_{v}"] = math.dist(sol.exit[v], sol.entry[v])
    return a


def solution_to_assignment(inst: Instance, sol, formulation: str = "mtz",
                           horizon: HorizonParams | None = None) -> dict:
    """Variable values induced by a tour solution for ``mtz``, ``sec``, ``ssec`` or ``time``."""
    n = len(inst)
    a = _domain_values(inst, sol)
    order = sol.tour.order
    k = order.index(0)
    order = order[k:] + order[:k]  # stage and order numbering start at element 0
    arcs = set(sol.tour.edges())
    if formulation == "time":
        H = horizon or HorizonParams.constant(inst)
        stage = {v: k + 1 for k, v in enumerate(order)}
        for v in range(n):
            for t in range(1, n + 1):
                a[f"y_{v}_{t}"] = 1.0 if stage[v] == t else 0.0
                beta = float(H.beta_in[t - 1, v])
                a[f"d_in_{v}_{t}"] = beta * a[f"d_in_{v}"] if stage[v] == t else 0.0
        for v, w in _directed_pairs(n):
            dist = math.dist(sol.exit[v], sol.entry[w])
            for t in range(1, n + 1):
                on = stage[v] == t and stage[w] == t % n + 1
                d = float(H.beta_out[t - 1, v, w]) * dist
                a[f"z_{v}_{w}_{t}"] = 1.0 if on else 0.0
                a[f"d_out_{v}_{w}_{t}"] = d
                a[f"p_{v}_{w}_{t}"] = d if on else 0.0
        return a
    if formulation == "ssec":
        und = {(min(v, w), max(v, w)) for v, w in arcs}
        for v in range(n):
            for w in range(v + 1, n):
                dist = math.dist(sol.exit[v], sol.entry[w])
                on = (v, w) in und
                a[f"z_{v}_{w}"] = 1.0 if on else 0.0
                a[f"d_out_{v}_{w}"] = dist
                a[f"p_{v}_{w}"] = dist if on else 0.0
        return a
    if formulation not in ("mtz", "sec"):
        raise ValueError(f"unknown formulation {formulation!r}")
    for v, w in _directed_pairs(n):
        dist = math.dist(sol.exit[v], sol.entry[w])
        on = (v, w) in arcs
        a[f"z_{v}_{w}"] = 1.0 if on else 0.0
        a[f"d_out_{v}_{w}"] = dist
        a[f"p_{v}_{w}"] = dist if on else 0.0
    if formulation == "mtz":
        for k, v in enumerate(order):
            a[f"s_{v}"] = float(k + 1)
    return a


# --------------------------------------------------------------------------
# subtour separation


def separate_sec(z_values: dict) -> list[frozenset]:
    """Vertex sets of the subtours in an integral edge selection, shortest first.

    Keys are ``(v, w)`` pairs (directed or not); an empty list means the
    selection is one Hamiltonian cycle.
    """
    verts = sorted({int(k) for e in z_values for k in e})
    if not verts:
        return []
    index = {v: i for i, v in enumerate(verts)}
    rows, cols = [], []
    for (v, w), val in z_values.items():
        x = float(val)
        if abs(x - round(x)) > 1e-9 or round(x) not in (0, 1):
            raise geo.DomainError(f"edge ({v}, {w}) has non-integral value {x}")
        if round(x) == 1:
            rows.append(index[int(v)])
            cols.append(index[int(w)])
    g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(verts), len(verts)))
    k, labels = connected_components(g, directed=False)
    if k == 1:
        return []
    comps = [frozenset(verts[i] for i in np.flatnonzero(labels == c)) for c in range(k)]
    return sorted(comps, key=lambda s: (len(s), min(s)))


# --------------------------------------------------------------------------
# text format


class ModelParseError(ValueError):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _terms(coefs: dict) -> str:
    return " ".join(f"{k}:{_num(coefs[k])}" for k in sorted(coefs))


def export_model(model: Model) -> str:
    nl, ns = len(model.linear_constraints), len(model.soc_constraints)
    out = ["XPPN-MODEL v1", f"NAME {model.name}", f"NOTE {model.note}",
           f"COUNTS vars={len(model.variables)} linear={nl} soc={ns} annot={len(model.annotations)}",
           "VARS"]
    out += [f"{v.name} {v.kind} {_num(v.lower)} {_num(v.upper)}" for v in model.variables]
    out.append("LINEAR")
    for c in model.linear_constraints:
        out.append(f"{c.id} {c.sense} {_num(c.rhs)} {_terms(c.coefs)}".rstrip())
    out.append("SOC")
    for c in model.soc_constraints:
        pieces = [f"{_num(c.head[1])} {_terms(c.head[0])}".rstrip()]
        pieces += [f"{_num(r[1])} {_terms(r[0])}".rstrip() for r in c.rows]
        out.append(f"{c.id} {len(c.rows)} " + " ; ".join(pieces))
    out.append("OBJ")
    out.append(f"{_num(model.objective_const)} {_terms(model.objective)}".rstrip())
    out.append("ANNOT")
    out += [f"{cid} {model.annotations[cid]}" for cid in _annot_order(model)]
    return "\n".join(out) + "\n"


def _annot_order(model: Model) -> list[str]:
    ids = [c.id for c in model.linear_constraints] + [c.id for c in model.soc_constraints]
    extra = sorted(k for k in model.annotations if k not in set(ids))
    return [i for i in ids if i in model.annotations] + extra


def _parse_terms(tokens, lineno):
    coefs = {}
    for tok in tokens:
        name, sep, val = tok.rpartition(":")
        if not sep or not name:
            raise ModelParseError(f"line {lineno}: bad term {tok!r}")
        try:
            coefs[name] = float(val)
        except ValueError:
            raise ModelParseError(f"line {lineno}: bad coefficient in {tok!r}") from None
    return coefs


def import_model(text: str) -> Model:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def take(prefix=None):
        nonlocal pos
        if pos >= len(lines):
            raise ModelParseError(f"line {pos + 1}: unexpected end of file")
        line = lines[pos]
        pos += 1
        if prefix is not None and not line.startswith(prefix):
            raise ModelParseError(f"line {pos}: expected {prefix!r}, got {line[:40]!r}")
        return line

    take("XPPN-MODEL v1")
    m = Model(take("NAME ")[5:])
    m.note = take("NOTE")[5:]
    counts = {}
    for tok in take("COUNTS ").split()[1:]:
        k, _, v = tok.partition("=")
        counts[k] = int(v)
    take("VARS")
    for _ in range(counts["vars"]):
        parts = take().split()
        if len(parts) != 4 or parts[1] not in KINDS:
            raise ModelParseError(f"line {pos}: bad variable line")
        m.variables.append(Variable(parts[0], parts[1], float(parts[2]), float(parts[3])))
    take("LINEAR")
    for _ in range(counts["linear"]):
        parts = take().split()
        if len(parts) < 3 or parts[1] not in SENSES:
            raise ModelParseError(f"line {pos}: bad linear constraint")
        m.linear_constraints.append(
            LinearConstraint(parts[0], _parse_terms(parts[3:], pos), parts[1], float(parts[2])))
    take("SOC")
    for _ in range(counts["soc"]):
        line = take()
        cid, k, rest = line.split(" ", 2)
        pieces = []
        for chunk in rest.split(" ; "):
            toks = chunk.split()
            pieces.append((_parse_terms(toks[1:], pos), float(toks[0])))
        if len(pieces) != int(k) + 1:
            raise ModelParseError(f"line {pos}: expected {k} cone rows")
        m.soc_constraints.append(SocConstraint(cid, pieces[0], tuple(pieces[1:])))
    take("OBJ")
    toks = take().split()
    m.objective_const = float(toks[0])
    m.objective = _parse_terms(toks[1:], pos)
    take("ANNOT")
    for _ in range(counts["annot"]):
        cid, _, tag = take().partition(" ")
        m.annotations[cid] = tag
    if pos != len(lines):
        raise ModelParseError(f"line {pos + 1}: trailing content")
    try:
        m.validate()
    except ValueError as exc:
        raise ModelParseError(str(exc)) from exc
    return m
