"""Planar element shapes and the geometric primitives the solvers rely on.

Elements are immutable dataclasses.  Convex shapes (``Circle``, ``Ellipse``,
``Polygon``, ``SocRegion``) each convert to a :class:`SocSet`; ``UnionSoc`` is a
finite union of convex members and ``Chain`` a polygonal chain with a required
coverage fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from ._conic import ConicProgram


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class Point(NamedTuple):
    x: float
    y: float


def _pt(p) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(2)


def _as_point(a) -> Point:
    return Point(float(a[0]), float(a[1]))


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# --------------------------------------------------------------------------
# SOC representation


@dataclass(frozen=True)
class SocRow:
    """One cone row ``||B x + b|| <= c.x + d``."""

    B: tuple = ((0.0, 0.0), (0.0, 0.0))
    b: tuple = (0.0, 0.0)
    c: tuple = (0.0, 0.0)
    d: float = 0.0

    def residual(self, p) -> float:
        p = _pt(p)
        B = np.asarray(self.B, float)
        return float(np.linalg.norm(B @ p + np.asarray(self.b)) - np.dot(self.c, p) - self.d)

    @property
    def is_linear(self) -> bool:
        return not np.any(np.asarray(self.B)) and not np.any(np.asarray(self.b))


@dataclass(frozen=True)
class SocSet:
    rows: tuple[SocRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("SocSet needs at least one row")

    def contains(self, p, tol: float = 0.0) -> bool:
        return all(r.residual(p) <= tol for r in self.rows)


def add_membership(prog: ConicProgram, socset: SocSet, xv: tuple[int, int],
                   scale: int | None = None, slack: tuple[dict, float] | None = None) -> None:
    """Constrain point variables ``xv`` to ``socset`` inside ``prog``.

    With ``scale`` (a variable index ``theta``) the perspective
    ``||B x + theta b|| <= c.x + theta d`` is imposed instead, which is what a
    convex-hull-of-union relaxation needs.  ``slack`` is an affine term added
    to every right-hand side (big-M disjunctions).
    """
    for row in socset.rows:
        B = np.asarray(row.B, float)
        head = {xv[0]: row.c[0], xv[1]: row.c[1]}
        const = 0.0
        if scale is None:
            const = row.d
        else:
            head[scale] = head.get(scale, 0.0) + row.d
        if slack is not None:
            for k, v in slack[0].items():
                head[k] = head.get(k, 0.0) + v
            const += slack[1]
        if row.is_linear:
            prog.add_ge(head, -const)
            continue
        rows = []
        for i in range(2):
            terms = {xv[0]: B[i, 0], xv[1]: B[i, 1]}
            c_i = row.b[i]
            if scale is None:
                rows.append((terms, c_i))
            else:
                terms[scale] = terms.get(scale, 0.0) + c_i
                rows.append((terms, 0.0))
        prog.add_soc((head, const), rows)


# --------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(map(float, self.center)))
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")
        _check_discount(self.discount)

    def _project(self, p):
        c = np.asarray(self.center)
        v = p - c
        n = math.hypot(*v)
        if n <= self.radius:
            return p.copy()
        return c + v * (self.radius / n)

    def _support(self, u):
        return float(np.dot(self.center, u) + self.radius * math.hypot(*u))

    def _disk(self):
        return np.asarray(self.center), self.radius

    def socset(self) -> SocSet:
        cx, cy = self.center
        return SocSet((SocRow(((1.0, 0.0), (0.0, 1.0)), (-cx, -cy), (0.0, 0.0), self.radius),))

    def _boundary(self, theta):
        c = np.asarray(self.center).reshape((2,) + (1,) * np.ndim(theta))
        return c + self.radius * np.array([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    axes: tuple[float, float]
    rotation: float = 0.0
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(map(float, self.center)))
        object.__setattr__(self, "axes", tuple(map(float, self.axes)))
        if len(self.axes) != 2 or min(self.axes) <= 0:
            raise ValueError("ellipse semi-axes must be two positive reals")
        _check_discount(self.discount)

    def _local(self, p):
        return _rot(self.rotation).T @ (p - np.asarray(self.center))

    def _world(self, q):
        return np.asarray(self.center) + _rot(self.rotation) @ q

    def _project(self, p):
        q = self._local(p)
        a, b = self.axes
        if (q[0] / a) ** 2 + (q[1] / b) ** 2 <= 1.0:
            return p.copy()
        return self._world(_ellipse_foot(a, b, q))

    def _support(self, u):
        a, b = self.axes
        w = _rot(self.rotation).T @ np.asarray(u, float)
        return float(np.dot(self.center, u) + math.hypot(a * w[0], b * w[1]))

    def _disk(self):
        return np.asarray(self.center), max(self.axes)

    def socset(self) -> SocSet:
        a, b = self.axes
        M = np.diag([1 / a, 1 / b]) @ _rot(self.rotation).T
        off = -M @ np.asarray(self.center)
        return SocSet((SocRow(tuple(map(tuple, M)), tuple(off), (0.0, 0.0), 1.0),))

    def _boundary(self, theta):
        a, b = self.axes
        c = np.asarray(self.center).reshape((2,) + (1,) * np.ndim(theta))
        return c + _rot(self.rotation) @ np.array([a * np.cos(theta), b * np.sin(theta)])


def _ellipse_foot(a: float, b: float, q: np.ndarray, tol: float = 1e-12, max_iter: int = 100):
    """Closest point on the axis-aligned ellipse to an exterior point ``q``.

    Newton on the KKT multiplier ``t``; ``F`` is convex and decreasing on
    ``t >= 0`` so iterates from ``t = 0`` increase monotonically.
    """
    a2, b2 = a * a, b * b

    def F(t):
        u, v = a * q[0] / (t + a2), b * q[1] / (t + b2)
        return u * u + v * v - 1.0

    def dF(t):
        return -2.0 * (a2 * q[0] ** 2 / (t + a2) ** 3 + b2 * q[1] ** 2 / (t + b2) ** 3)

    t = 0.0
    converged = False
    for _ in range(max_iter):
        step = F(t) / dF(t)
        t_new = t - step
        if not math.isfinite(t_new) or t_new < 0:
            break
        if abs(t_new - t) <= tol * (1.0 + t):
            t = t_new
            converged = True
            break
        t = t_new
    if not converged:
        lo, hi = 0.0, max(a, b) * math.hypot(*q) + 1.0
        while F(hi) > 0:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if F(mid) > 0:
                lo = mid
            else:
                hi = mid
        t = 0.5 * (lo + hi)
    x = np.array([a2 * q[0] / (t + a2), b2 * q[1] / (t + b2)])
    # pull back exactly onto the curve
    s = math.hypot(x[0] / a, x[1] / b)
    return x / s if s > 0 else x


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]
    discount: float = 1.0

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area = _signed_area(V)
        if abs(area) <= 1e-12:
            raise ValueError("polygon vertices are collinear")
        if area < 0:
            V = V[::-1]
        cr = _edge_cross(V)
        if np.any(cr < -1e-9 * max(1.0, np.abs(V).max()) ** 2):
            raise ValueError("polygon is not convex")
        object.__setattr__(self, "vertices", tuple((float(x), float(y)) for x, y in V))
        _check_discount(self.discount)

    @property
    def _V(self):
        return np.asarray(self.vertices)

    def _inside(self, p, eps=0.0):
        V = self._V
        E = np.roll(V, -1, axis=0) - V
        W = p - V
        cross = E[:, 0] * W[:, 1] - E[:, 1] * W[:, 0]
        return bool(np.all(cross >= -eps))

    def _project(self, p):
        if self._inside(p):
            return p.copy()
        return _project_polyline(self._V, p, closed=True)

    def _support(self, u):
        return float(np.max(self._V @ np.asarray(u, float)))

    def socset(self) -> SocSet:
        rows = []
        for n, off in _halfplanes(self._V):
            # n.x <= off  as  ||0|| <= -n.x + off
            rows.append(SocRow(c=(-float(n[0]), -float(n[1])), d=float(off)))
        return SocSet(tuple(rows))


@dataclass(frozen=True)
class SocRegion:
    """Convex set given directly by cone rows; operations go through a conic solve."""

    soc: SocSet
    discount: float = 1.0

    def __post_init__(self):
        _check_discount(self.discount)

    def _project(self, p):
        if self.soc.contains(p):
            return p.copy()
        prog = ConicProgram()
        x = (prog.var(), prog.var())
        t = prog.var()
        prog.add_norm_le(t, x, offset=(-p[0], -p[1]))
        add_membership(prog, self.soc, x)
        prog.cost = {t: 1.0}
        res = prog.minimize()
        if not res.ok:
            raise ValueError(f"projection onto cone region failed ({res.status})")
        return res.x[list(x)]

    def _support_point(self, u):
        prog = ConicProgram()
        x = (prog.var(), prog.var())
        add_membership(prog, self.soc, x)
        prog.cost = {x[0]: -float(u[0]), x[1]: -float(u[1])}
        res = prog.minimize()
        if not res.ok:
            raise ValueError(f"cone region is unbounded or empty ({res.status})")
        return res.x[list(x)]

    def _support(self, u):
        return float(np.dot(self._support_point(u), u))

    def _disk(self):
        lo = np.array([-self._support((-1.0, 0.0)), -self._support((0.0, -1.0))])
        hi = np.array([self._support((1.0, 0.0)), self._support((0.0, 1.0))])
        return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))

    def socset(self) -> SocSet:
        return self.soc


Convex = Union[Circle, Ellipse, Polygon, SocRegion]


@dataclass(frozen=True)
class UnionSoc:
    members: tuple
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("union needs at least one member")
        for m in self.members:
            if not isinstance(m, (Circle, Ellipse, Polygon, SocRegion)):
                raise ValueError("union members must be convex shapes")
        _check_discount(self.discount)


@dataclass(frozen=True)
class Chain:
    breakpoints: tuple[tuple[float, float], ...]
    coverage: float = 0.0
    discount: float = 1.0

    def __post_init__(self):
        P = np.asarray(self.breakpoints, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2 or len(P) < 2:
            raise ValueError("chain needs ≥ 2 breakpoints")
        if np.any(np.linalg.norm(np.diff(P, axis=0), axis=1) <= 1e-12):
            raise ValueError("chain segments must have positive length")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("chain coverage must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", tuple((float(x), float(y)) for x, y in P))
        _check_discount(self.discount)

    @property
    def n_segments(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def _P(self):
        return np.asarray(self.breakpoints)

    def segment(self, j: int) -> "Segment":
        """Segment ``j`` (1-based, as in the chain parameterization)."""
        return Segment(self.breakpoints[j - 1], self.breakpoints[j])

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self._P, axis=0), axis=1).sum())


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]

    @property
    def _V(self):
        return np.asarray([self.a, self.b], float)

    def _project(self, p):
        return _project_segment(np.asarray(self.a), np.asarray(self.b), p)[0]

    def _support(self, u):
        return float(np.max(self._V @ np.asarray(u, float)))


Element = Union[Circle, Ellipse, Polygon, SocRegion, UnionSoc, Chain]


def _check_discount(f):
    if not (f >= 0 and math.isfinite(f)):
        raise ValueError("discount factor must be a finite non-negative real")


def is_convex(elem) -> bool:
    return isinstance(elem, (Circle, Ellipse, Polygon, SocRegion))


def pieces(elem) -> list:
    """Convex pieces whose union is the element (members, segments or itself)."""
    if isinstance(elem, UnionSoc):
        return list(elem.members)
    if isinstance(elem, Chain):
        return [elem.segment(j) for j in range(1, elem.n_segments + 1)]
    return [elem]


def to_socset(elem) -> SocSet:
    if not is_convex(elem):
        raise DomainError(f"{type(elem).__name__} has no single SOC representation")
    return elem.socset()


# --------------------------------------------------------------------------
# polygonal helpers


def _signed_area(V):
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _edge_cross(V):
    E = np.roll(V, -1, axis=0) - V
    En = np.roll(E, -1, axis=0)
    return E[:, 0] * En[:, 1] - E[:, 1] * En[:, 0]


def _halfplanes(V):
    """Outward unit normals and offsets of a CCW convex polygon."""
    out = []
    for i in range(len(V)):
        e = V[(i + 1) % len(V)] - V[i]
        n = np.array([e[1], -e[0]])
        n /= np.linalg.norm(n)
        out.append((n, float(n @ V[i])))
    return out


def _project_segment(a, b, p):
    d = b - a
    dd = float(d @ d)
    g = 0.0 if dd == 0 else min(1.0, max(0.0, float((p - a) @ d) / dd))
    return a + g * d, g


def _project_polyline(V, p, closed=False):
    best, best_d = None, math.inf
    m = len(V) if closed else len(V) - 1
    for i in range(m):
        q, _ = _project_segment(V[i], V[(i + 1) % len(V)], p)
        d = math.hypot(*(q - p))
        if d < best_d:
            best, best_d = q, d
    return best


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersection(p1, p2, q1, q2):
    """A common point of two closed segments, or None."""
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        t = d1 / (d1 - d2)
        return p1 + t * (p2 - p1)
    for x, (a, b) in ((p1, (q1, q2)), (p2, (q1, q2)), (q1, (p1, p2)), (q2, (p1, p2))):
        q, _ = _project_segment(a, b, x)
        if math.hypot(*(q - x)) <= 1e-12 * max(1.0, abs(x).max()):
            return x.copy()
    return None


def _edges(V, closed):
    m = len(V) if closed else len(V) - 1
    return [(V[i], V[(i + 1) % len(V)]) for i in range(m)]


def _polygonal_distance(A, closed_a, B, closed_b):
    """Exact distance between two convex polygonal pieces (polygon or segment)."""
    if closed_a:
        pa_poly = Polygon(tuple(map(tuple, A)))
        for v in B:
            if pa_poly._inside(v):
                return 0.0, v.copy(), v.copy()
    if closed_b:
        pb_poly = Polygon(tuple(map(tuple, B)))
        for v in A:
            if pb_poly._inside(v):
                return 0.0, v.copy(), v.copy()
    ea, eb = _edges(A, closed_a), _edges(B, closed_b)
    for a1, a2 in ea:
        for b1, b2 in eb:
            x = _segments_intersection(a1, a2, b1, b2)
            if x is not None:
                return 0.0, x, x.copy()
    best = (math.inf, None, None)
    for a1, a2 in ea:
        for b1, b2 in eb:
            for x, (s, t), flip in ((a1, (b1, b2), False), (a2, (b1, b2), False),
                                    (b1, (a1, a2), True), (b2, (a1, a2), True)):
                q, _ = _project_segment(s, t, x)
                d = math.hypot(*(q - x))
                if d < best[0] - 1e-15:
                    best = (d, q, x) if flip else (d, x, q)
    return best


# --------------------------------------------------------------------------
# public operations


def contains(elem, p, tol: float = 0.0) -> bool:
    """True iff ``p`` lies within Euclidean distance ``tol`` of ``elem``."""
    if tol < 0:
        raise DomainError("tol must be non-negative")
    p = _pt(p)
    if isinstance(elem, Polygon) and elem._inside(p):
        return True
    if isinstance(elem, SocRegion) and elem.soc.contains(p):
        return True
    q = _pt(project(elem, p))
    return math.hypot(*(q - p)) <= tol


def project(elem, p) -> Point:
    """Nearest point of ``elem`` to ``p``; ties go to the lowest member/segment."""
    p = _pt(p)
    if isinstance(elem, Chain):
        return _as_point(_project_polyline(elem._P, p))
    if isinstance(elem, UnionSoc):
        best, best_d = None, math.inf
        for m in elem.members:
            q = m._project(p)
            d = math.hypot(*(q - p))
            if d < best_d:
                best, best_d = q, d
        return _as_point(best)
    return _as_point(elem._project(p))


def chain_point_at(chain: Chain, lam: float) -> Point:
    n = chain.n_segments
    if not 0.0 <= lam <= n:
        raise DomainError(f"lambda {lam} outside [0, {n}]")
    j = min(int(math.floor(lam)) + 1, n)
    g = lam - (j - 1)
    A = chain._P
    return _as_point((1.0 - g) * A[j - 1] + g * A[j])


def chain_param(chain: Chain, p) -> float:
    """Parameter ``lambda`` of the point of ``chain`` closest to ``p``."""
    p = _pt(p)
    A = chain._P
    best, best_d = 0.0, math.inf
    for j in range(1, chain.n_segments + 1):
        q, g = _project_segment(A[j - 1], A[j], p)
        d = math.hypot(*(q - p))
        if d < best_d:
            best, best_d = (j - 1) + g, d
    return best


def support(elem, u) -> float:
    """Support function ``max_{x in elem} u.x``."""
    u = _pt(u)
    if isinstance(elem, Chain):
        return float(np.max(elem._P @ u))
    return max(pc._support(u) for pc in pieces(elem))


def _distance_convex_pair(a, b):
    """Distance between two convex pieces with attaining points."""
    poly = (Polygon, Segment)
    if isinstance(a, poly) and isinstance(b, poly):
        return _polygonal_distance(a._V, isinstance(a, Polygon), b._V, isinstance(b, Polygon))
    if isinstance(a, Circle) or isinstance(b, Circle):
        swap = not isinstance(a, Circle)
        circ, other = (b, a) if swap else (a, b)
        c = np.asarray(circ.center)
        q = other._project(c)
        dc = math.hypot(*(q - c))
        if dc <= circ.radius:
            pc, po, dist = q.copy(), q, 0.0
        else:
            pc = c + (q - c) * (circ.radius / dc)
            po, dist = q, dc - circ.radius
        return (dist, po, pc) if swap else (dist, pc, po)
    # general pair: one small conic program
    prog = ConicProgram()
    xa = (prog.var(), prog.var())
    xb = (prog.var(), prog.var())
    t = prog.var()
    prog.add_norm_le(t, xa, xb)
    for piece, xv in ((a, xa), (b, xb)):
        if isinstance(piece, Segment):
            g = prog.var(0.0, 1.0)
            A0, A1 = np.asarray(piece.a), np.asarray(piece.b)
            for k in range(2):
                prog.add_eq({xv[k]: 1.0, g: -(A1[k] - A0[k])}, A0[k])
        else:
            add_membership(prog, piece.socset(), xv)
    prog.cost = {t: 1.0}
    res = prog.minimize()
    if not res.ok:
        raise ValueError(f"distance program failed ({res.status})")
    pa = a._project(res.x[list(xa)])
    pb = b._project(res.x[list(xb)])
    return math.hypot(*(pa - pb)), pa, pb


def min_distance(a, b, tol: float = 1e-9) -> tuple[float, Point, Point]:
    """Minimum Euclidean distance between two elements and attaining points."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    best = (math.inf, None, None)
    for pa in pieces(a):
        for pb in pieces(b):
            d, xa, xb = _distance_convex_pair(pa, pb)
            if d < best[0] - tol * 1e-3:
                best = (d, xa, xb)
            if best[0] == 0.0:
                break
        if best[0] == 0.0:
            break
    d, xa, xb = best
    return float(d), _as_point(xa), _as_point(xb)


def distance_lower_bound(a, b, tol: float = 1e-9) -> float:
    """Certified lower bound on the set distance (separating-hyperplane dual).

    Equals ``min_distance`` up to solver accuracy but never exceeds the true
    distance when the support functions are exact.
    """
    best = math.inf
    for pa in pieces(a):
        for pb in pieces(b):
            d, xa, xb = _distance_convex_pair(pa, pb)
            if d <= 1e-12:
                return 0.0
            u = (xb - xa) / d
            lb = -pb._support(-u) - pa._support(u)
            best = min(best, max(0.0, min(d, lb)))
    return float(best)


def _bound_repr(piece):
    """('disk', center, radius) or ('verts', V) used by the max-distance bounds."""
    if isinstance(piece, (Polygon, Segment)):
        return ("verts", piece._V)
    c, r = piece._disk()
    return ("disk", np.asarray(c, float), float(r))


def _bound_pair(ra, rb) -> float:
    if ra[0] == "disk" and rb[0] == "disk":
        return float(np.linalg.norm(ra[1] - rb[1]) + ra[2] + rb[2])
    if ra[0] == "disk":
        ra, rb = rb, ra
    if rb[0] == "disk":
        return float(np.max(np.linalg.norm(ra[1] - rb[1], axis=1)) + rb[2])
    diff = ra[1][:, None, :] - rb[1][None, :, :]
    return float(np.max(np.linalg.norm(diff, axis=2)))


def _bound_reprs(elem):
    if isinstance(elem, Chain):
        return [("verts", elem._P)]
    return [_bound_repr(p) for p in pieces(elem)]


def max_distance_bound(a, b) -> float:
    """Upper bound on ``max ||x - y||`` over ``x`` in ``a`` and ``y`` in ``b``."""
    return max(_bound_pair(ra, rb) for ra in _bound_reprs(a) for rb in _bound_reprs(b))


def diameter_bound(elem) -> float:
    if isinstance(elem, Chain):
        return elem.length
    reps = _bound_reprs(elem)
    best = 0.0
    for i, ri in enumerate(reps):
        for rj in reps[i:]:
            if ri is rj:
                best = max(best, 2 * ri[2] if ri[0] == "disk" else _bound_pair(ri, ri))
            else:
                best = max(best, _bound_pair(ri, rj))
    return float(best)


def bounding_box(elem) -> tuple[float, float, float, float]:
    """``(xmin, ymin, xmax, ymax)`` of the element."""
    return (-support(elem, (-1, 0)), -support(elem, (0, -1)),
            support(elem, (1, 0)), support(elem, (0, 1)))


def _round_boundary(shape, n=720):
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return theta, shape._boundary(theta).T


def _max_over_boundary(shape, fun, n=720):
    """Maximise ``fun`` over the boundary of a circle/ellipse (grid + golden refine)."""
    theta, P = _round_boundary(shape, n)
    vals = np.array([fun(p) for p in P])
    k = int(np.argmax(vals))
    h = 2 * np.pi / n
    lo, hi = theta[k] - h, theta[k] + h
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
        if fun(shape._boundary(m1)) < fun(shape._boundary(m2)):
            lo = m1
        else:
            hi = m2
    return max(float(vals[k]), fun(shape._boundary(0.5 * (lo + hi))))


def element_contains_element(outer, inner, tol: float = 1e-9) -> bool:
    """Whether every point of ``inner`` lies in ``outer`` (within ``tol``)."""
    if not (is_convex(outer) and is_convex(inner)):
        return False
    if isinstance(inner, Polygon):
        return all(contains(outer, v, tol) for v in inner.vertices)
    if isinstance(outer, Polygon):
        return all(inner._support(n) <= off + tol for n, off in _halfplanes(outer._V))
    if isinstance(outer, Circle):
        c = np.asarray(outer.center)
        if isinstance(inner, Circle):
            return math.hypot(*(np.asarray(inner.center) - c)) + inner.radius <= outer.radius + tol
        if isinstance(inner, Ellipse):
            far = _max_over_boundary(inner, lambda p: math.hypot(*(p - c)))
            return far <= outer.radius + tol
    if isinstance(inner, (Circle, Ellipse)):
        rows = outer.socset().rows

        def worst(p):
            return max(r.residual(p) for r in rows)

        if _max_over_boundary(inner, worst) <= 0:
            return True
        if tol == 0:
            return False
        # row residuals are not Euclidean; fall back to sampled projections
        _, P = _round_boundary(inner)
        return all(contains(outer, p, tol) for p in P)
    # inner is a SocRegion: test support points in many directions
    for th in np.linspace(0, 2 * np.pi, 256, endpoint=False):
        if not contains(outer, inner._support_point((math.cos(th), math.sin(th))), tol):
            return False
    return True


def boundary_distance(elem, p) -> float:
    """Distance from ``p`` to the boundary of a convex element (0 on the boundary)."""
    p = _pt(p)
    q = _pt(project(elem, p))
    outside = math.hypot(*(q - p))
    if outside > 0:
        return outside
    if isinstance(elem, Circle):
        return abs(elem.radius - math.hypot(*(p - np.asarray(elem.center))))
    if isinstance(elem, Polygon):
        V = elem._V
        return min(math.hypot(*(_project_segment(a, b, p)[0] - p)) for a, b in _edges(V, True))
    if isinstance(elem, Ellipse):
        return -_max_over_boundary(elem, lambda x: -math.hypot(*(x - p)), n=2048)
    raise DomainError(f"boundary distance not available for {type(elem).__name__}")


def convex_hull(points: Sequence) -> np.ndarray:
    """CCW hull vertices (monotone chain); degenerate inputs return 1 or 2 points."""
    P = sorted(set((float(x), float(y)) for x, y in points))
    if len(P) <= 2:
        return np.asarray(P)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(P), half(P[::-1])
    H = lower[:-1] + upper[:-1]
    return np.asarray(H)


def distance_to_hull(points: Sequence, p) -> float:
    H = convex_hull(points)
    p = _pt(p)
    if len(H) == 1:
        return float(np.linalg.norm(H[0] - p))
    if len(H) == 2:
        return float(np.linalg.norm(_project_segment(H[0], H[1], p)[0] - p))
    poly = Polygon(tuple(map(tuple, H)))
    return 0.0 if poly._inside(p) else float(np.linalg.norm(_project_polyline(H, p, True) - p))


def representative_point(elem) -> Point:
    """A deterministic point inside the element (centre, centroid or mid-chain)."""
    if isinstance(elem, (Circle, Ellipse)):
        return _as_point(elem.center)
    if isinstance(elem, Polygon):
        return _as_point(elem._V.mean(axis=0))
    if isinstance(elem, Chain):
        return chain_point_at(elem, elem.n_segments / 2)
    if isinstance(elem, UnionSoc):
        return representative_point(elem.members[0])
    xmin, ymin, xmax, ymax = bounding_box(elem)
    return project(elem, ((xmin + xmax) / 2, (ymin + ymax) / 2))
