"""Distance bounds for the linearised models and cuts, and containment preprocessing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .instance import Instance


@dataclass(frozen=True)
class BoundsTable:
    """Pairwise distance bounds; ``M_out``/``m_out`` are symmetric n-by-n arrays."""

    M_out: np.ndarray
    m_out: np.ndarray
    M_in: np.ndarray

    @property
    def n(self) -> int:
        return len(self.M_in)

    def big_M(self, v: int, w: int) -> float:
        return float(self.M_out[v, w])

    def little_m(self, v: int, w: int) -> float:
        return float(self.m_out[v, w])


def compute_bounds(inst: Instance, tol: float = 1e-7) -> BoundsTable:
    """``m_out`` is the set distance, ``M_out`` the max-distance bound, ``M_in`` the diameter bound.

    ``m_out`` uses the dual-certified lower bound so that Benders cuts built on
    it stay valid even when the distance comes out of a conic solve.
    """
    n = len(inst)
    M = np.zeros((n, n))
    m = np.zeros((n, n))
    for v in range(n):
        for w in range(v + 1, n):
            a, b = inst[v], inst[w]
            M[v, w] = M[w, v] = geo.max_distance_bound(a, b)
            m[v, w] = m[w, v] = min(geo.distance_lower_bound(a, b, tol), M[v, w])
    Min = np.array([geo.diameter_bound(e) for e in inst.elements])
    return BoundsTable(M, m, Min)


# --------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class Reduction:
    kept: tuple[int, ...]
    deleted: tuple[tuple[int, int], ...]  # (deleted, witness) in deletion order

    @property
    def is_identity(self) -> bool:
        return not self.deleted


def _deletable(elem) -> bool:
    # a container may only vanish if visiting it on the witness costs nothing
    return geo.is_convex(elem) and elem.discount >= 1.0


def preprocess(inst: Instance, tol: float = 1e-9) -> tuple[Instance, Reduction]:
    """Delete convex elements containing another remaining element.

    Only elements with discount >= 1 are removed: a set entered and left at
    the same point adds no cost, while a discounted container could act as a
    shortcut and its removal would change the optimum.  Equal sets lose the
    higher index.
    """
    alive = list(range(len(inst)))
    deleted: list[tuple[int, int]] = []
    cache: dict[tuple[int, int], bool] = {}

    def inside(o, i):
        if (o, i) not in cache:
            cache[(o, i)] = geo.element_contains_element(inst[o], inst[i], tol)
        return cache[(o, i)]

    changed = True
    while changed and len(alive) > 1:
        changed = False
        for o in alive:
            if not _deletable(inst[o]):
                continue
            for i in alive:
                if i == o or not geo.is_convex(inst[i]) or not inside(o, i):
                    continue
                if inside(i, o) and o < i:
                    continue  # equal sets: keep the lower index
                deleted.append((o, i))
                alive.remove(o)
                changed = True
                break
            if changed:
                break
    return inst.subset(alive), Reduction(tuple(alive), tuple(deleted))


def lift_solution(original: Instance, red: Reduction, sol):
    """Map a solution of the reduced instance back onto the original one.

    Each deleted element is visited right before its witness, at the witness's
    entry point, so the cost is unchanged.
    """
    from .touring import Tour, evaluate

    order = [red.kept[v] for v in sol.tour.order]
    entry = {red.kept[v]: p for v, p in sol.entry.items()}
    exit_ = {red.kept[v]: p for v, p in sol.exit.items()}
    lam = {red.kept[v]: l for v, l in sol.lam.items()}
    for gone, witness in reversed(red.deleted):
        k = order.index(witness)
        order.insert(k, gone)
        entry[gone] = exit_[gone] = entry[witness]
    return evaluate(original, Tour.from_sequence(order), entry, exit_, lam, tol=1e-6)


def collapse_hints(inst: Instance) -> list[bool]:
    """Elements whose entry and exit may be merged without loss (convex, f >= 1)."""
    return [geo.is_convex(e) and e.discount >= 1.0 for e in inst.elements]


# --------------------------------------------------------------------------
# post-hoc validators; each returns a list of (element, message)


def check_collapse(inst: Instance, sol, tol: float = 1e-5) -> list[tuple[int, str]]:
    out = []
    for v, e in enumerate(inst.elements):
        if geo.is_convex(e) and e.discount >= 1.0:
            gap = math.dist(sol.entry[v], sol.exit[v])
            if gap > tol:
                out.append((v, f"entry and exit differ by {gap:.3g}"))
    return out


def check_boundary(inst: Instance, sol, tol: float = 1e-4) -> list[tuple[int, str]]:
    out = []
    for v, e in enumerate(inst.elements):
        if not (geo.is_convex(e) and e.discount >= 1.0) or isinstance(e, geo.SocRegion):
            continue
        for tag, p in (("entry", sol.entry[v]), ("exit", sol.exit[v])):
            d = geo.boundary_distance(e, p)
            if d > tol:
                out.append((v, f"{tag} point {d:.3g} away from the boundary"))
    return out


def check_circle_hull(inst: Instance, sol, tol: float = 1e-6) -> list[tuple[int, str]]:
    """All-circle instances: chosen points lie in the hull of the centres."""
    if not all(isinstance(e, geo.Circle) for e in inst.elements):
        return []
    centres = [e.center for e in inst.elements]
    out = []
    for v in range(len(inst)):
        for tag, p in (("entry", sol.entry[v]), ("exit", sol.exit[v])):
            d = geo.distance_to_hull(centres, p)
            if d > tol:
                out.append((v, f"{tag} point {d:.3g} outside the hull of centres"))
    return out
