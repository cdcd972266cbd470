"""Independent reference solvers used by the tests.

None of these import the conic machinery of the package: tours are
enumerated with itertools, TSP values come from a Held-Karp dynamic program,
and circle instances are solved on an angular grid refined with SLSQP.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from xppn import geometry as geo


def held_karp(D: np.ndarray) -> float:
    """Optimal closed-tour length over the distance matrix ``D``."""
    n = len(D)
    if n <= 1:
        return 0.0
    if n == 2:
        return float(D[0, 1] + D[1, 0])
    full = 1 << (n - 1)
    dp = np.full((full, n - 1), np.inf)
    for j in range(n - 1):
        dp[1 << j, j] = D[0, j + 1]
    for mask in range(1, full):
        for j in range(n - 1):
            if not mask & (1 << j) or not np.isfinite(dp[mask, j]):
                continue
            for k in range(n - 1):
                if mask & (1 << k):
                    continue
                nm = mask | (1 << k)
                cand = dp[mask, j] + D[j + 1, k + 1]
                if cand < dp[nm, k]:
                    dp[nm, k] = cand
    return float(min(dp[full - 1, j] + D[j + 1, 0] for j in range(n - 1)))


def tour_length(P: np.ndarray, order) -> float:
    idx = np.asarray(order)
    return float(np.linalg.norm(P[idx] - P[np.roll(idx, -1)], axis=1).sum())


def all_canonical_tours(n: int):
    if n <= 3:
        yield tuple(range(n))
        return
    for p in itertools.permutations(range(1, n)):
        if p[0] < p[-1]:
            yield (0,) + p


# --------------------------------------------------------------------------
# circles with entry = exit


def _circle_tour_cost(X: np.ndarray, order) -> float:
    return tour_length(X, order)


def circle_fixed_tour(centers, radii, order, grid: int = 720, sweeps: int = 200) -> float:
    """Optimal cost of a fixed tour through disks, one point per disk.

    A cyclic coordinate sweep over ``grid`` boundary angles gives a start,
    then SLSQP refines the points over the full disks (a convex problem).
    """
    C = np.asarray(centers, float)
    R = np.asarray(radii, float)
    n = len(C)
    order = list(order)
    th = 2 * np.pi * np.arange(grid) / grid
    ring = np.stack([np.cos(th), np.sin(th)], axis=1)
    X = C.copy()
    if n >= 2:
        # start from the projections of the centroid
        g = C.mean(axis=0)
        for v in range(n):
            d = g - C[v]
            nd = np.linalg.norm(d)
            X[v] = C[v] + (R[v] * d / nd if nd > R[v] else d)
    pos = {v: k for k, v in enumerate(order)}
    for _ in range(sweeps):
        moved = False
        for v in order:
            a = X[order[pos[v] - 1]]
            b = X[order[(pos[v] + 1) % n]]
            cand = C[v] + R[v] * ring
            cost = np.linalg.norm(cand - a, axis=1) + np.linalg.norm(cand - b, axis=1)
            k = int(np.argmin(cost))
            cur = np.linalg.norm(X[v] - a) + np.linalg.norm(X[v] - b)
            if cost[k] < cur - 1e-12:
                X[v] = cand[k]
                moved = True
        if not moved:
            break
    best = _circle_tour_cost(X, order)

    eps = 1e-14

    def f(x):
        Y = x.reshape(n, 2)
        idx = np.asarray(order)
        diff = Y[idx] - Y[np.roll(idx, -1)]
        return float(np.sqrt((diff ** 2).sum(axis=1) + eps).sum())

    cons = [{"type": "ineq", "fun": (lambda x, v=v: R[v] ** 2 - ((x[2 * v:2 * v + 2] - C[v]) ** 2).sum())}
            for v in range(n)]
    res = minimize(f, X.ravel(), constraints=cons, method="SLSQP",
                   options={"ftol": 1e-13, "maxiter": 500})
    if res.success:
        Y = res.x.reshape(n, 2)
        # pull numerically outside points back in before pricing
        for v in range(n):
            d = Y[v] - C[v]
            nd = np.linalg.norm(d)
            if nd > R[v]:
                Y[v] = C[v] + d * R[v] / nd
        best = min(best, _circle_tour_cost(Y, order))
    return best


def circle_brute_force(inst) -> tuple[float, tuple]:
    """Minimum over all canonical tours; circles with discount >= 1 only."""
    C = [e.center for e in inst.elements]
    R = [e.radius for e in inst.elements]
    best = (math.inf, None)
    for order in all_canonical_tours(len(inst)):
        c = circle_fixed_tour(C, R, order)
        if c < best[0]:
            best = (c, order)
    return best


# --------------------------------------------------------------------------
# sampling


def sample_points(elem, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` points of ``elem`` (not uniform for every kind, but covering it)."""
    if isinstance(elem, geo.Circle):
        t = rng.uniform(0, 2 * np.pi, k)
        r = elem.radius * np.sqrt(rng.uniform(0, 1, k))
        return np.asarray(elem.center) + np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
    if isinstance(elem, geo.Ellipse):
        t = rng.uniform(0, 2 * np.pi, k)
        r = np.sqrt(rng.uniform(0, 1, k))
        a, b = elem.axes
        local = np.stack([a * r * np.cos(t), b * r * np.sin(t)], axis=1)
        c, s = math.cos(elem.rotation), math.sin(elem.rotation)
        return np.asarray(elem.center) + local @ np.array([[c, s], [-s, c]])
    if isinstance(elem, geo.Chain):
        V = np.asarray(elem.breakpoints, float)
        lam = rng.uniform(0, elem.n_segments, k)
        seg = np.minimum(lam.astype(int), elem.n_segments - 1)
        t = (lam - seg)[:, None]
        return V[seg] + t * (V[seg + 1] - V[seg])
    if isinstance(elem, geo.UnionSoc):
        which = rng.integers(0, len(elem.members), k)
        out = np.empty((k, 2))
        for j, m in enumerate(elem.members):
            sel = which == j
            if sel.any():
                out[sel] = sample_points(m, int(sel.sum()), rng)
        return out
    if isinstance(elem, geo.Polygon):
        # random convex combinations of the vertices, with extra weight on the boundary
        V = np.asarray(elem.vertices)
        w = rng.dirichlet(np.full(len(V), 0.3), k)
        return w @ V
    # generic convex set: rejection in the bounding box
    x0, y0, x1, y1 = geo.bounding_box(elem)
    out = []
    while len(out) < k:
        p = rng.uniform([x0, y0], [x1, y1])
        if geo.contains(elem, p, 1e-12):
            out.append(p)
    return np.array(out)


def weber_grid(reps_fn, lo=0.0, hi=100.0, step=0.05) -> float:
    """Minimum of ``reps_fn`` (vectorised over centre arrays) on a square grid."""
    xs = np.arange(lo, hi + step / 2, step)
    best = math.inf
    for x in xs:
        pts = np.stack([np.full_like(xs, x), xs], axis=1)
        best = min(best, float(np.min(reps_fn(pts))))
    return best


def split_boundary_violations(inst, sol, tol=1e-4):
    """Boundary-validator hits split into (uncertified, certified).

    A hit is certified when both tour neighbours of the element place their
    points inside it: the optimal point then lies on a segment contained in
    the element, so no boundary point achieves the same cost by moving it.
    """
    from xppn.bounds import check_boundary

    order = sol.tour.order
    n = len(order)
    uncertified, certified = [], []
    for v, msg in check_boundary(inst, sol, tol):
        k = order.index(v)
        a, c = sol.exit[order[k - 1]], sol.entry[order[(k + 1) % n]]
        inside = geo.contains(inst[v], a, 1e-9) and geo.contains(inst[v], c, 1e-9)
        (certified if inside else uncertified).append((v, msg))
    return uncertified, certified
