"""Tiny second-order cone program builder on top of Clarabel.

Variables are integer indices; affine expressions are ``(terms, const)`` with
``terms`` a ``{index: coef}`` mapping.  Only what the solvers in this package
need: linear equalities/inequalities, variable bounds and 2- or 3-D cones.
"""

from __future__ import annotations

from dataclasses import dataclass

import clarabel
import numpy as np
from scipy import sparse

_OK = {"Solved", "AlmostSolved"}


@dataclass
class ConicResult:
    ok: bool
    status: str
    x: np.ndarray
    objective: float


class ConicProgram:
    def __init__(self):
        self.n = 0
        self._eq: list[tuple[dict, float]] = []
        self._le: list[tuple[dict, float]] = []
        self._soc: list[list[tuple[dict, float]]] = []
        self.cost: dict[int, float] = {}
        self.cost_const = 0.0

    def var(self, lb: float | None = None, ub: float | None = None) -> int:
        i = self.n
        self.n += 1
        if lb is not None:
            self._le.append(({i: -1.0}, -lb))
        if ub is not None:
            self._le.append(({i: 1.0}, ub))
        return i

    def add_eq(self, terms: dict, rhs: float) -> None:
        self._eq.append((terms, rhs))

    def add_le(self, terms: dict, rhs: float) -> None:
        self._le.append((terms, rhs))

    def add_ge(self, terms: dict, rhs: float) -> None:
        self._le.append(({k: -v for k, v in terms.items()}, -rhs))

    def add_soc(self, head: tuple[dict, float], rows: list[tuple[dict, float]]) -> None:
        """Add ``||(row_1, ..., row_k)|| <= head`` for affine rows."""
        self._soc.append([head, *rows])

    def add_norm_le(self, t: int, vec_a: tuple[int, int], vec_b: tuple[int, int] | None = None,
                    offset=(0.0, 0.0)) -> None:
        """``||a - b + offset|| <= t`` for 2-D point variables ``a`` and ``b``."""
        rows = []
        for k in range(2):
            terms = {vec_a[k]: 1.0}
            if vec_b is not None:
                terms[vec_b[k]] = terms.get(vec_b[k], 0.0) - 1.0
            rows.append((terms, float(offset[k])))
        self.add_soc(({t: 1.0}, 0.0), rows)

    def minimize(self, tol: float = 1e-10, max_iter: int = 200) -> ConicResult:
        rows, cols, vals, rhs = [], [], [], []
        r = 0

        def put(terms, const_rhs, sign=1.0):
            nonlocal r
            for j, a in terms.items():
                if a != 0.0:
                    rows.append(r)
                    cols.append(j)
                    vals.append(sign * a)
            rhs.append(const_rhs)
            r += 1

        cones = []
        for terms, b in self._eq:
            put(terms, b)
        if self._eq:
            cones.append(clarabel.ZeroConeT(len(self._eq)))
        for terms, b in self._le:
            put(terms, b)
        if self._le:
            cones.append(clarabel.NonnegativeConeT(len(self._le)))
        # s = b - A x  with  s = (head, rows) in the cone
        for block in self._soc:
            for terms, const in block:
                put(terms, const, sign=-1.0)
            cones.append(clarabel.SecondOrderConeT(len(block)))

        A = sparse.csc_matrix((vals, (rows, cols)), shape=(r, self.n))
        P = sparse.csc_matrix((self.n, self.n))
        q = np.zeros(self.n)
        for j, c in self.cost.items():
            q[j] += c
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_feas = tol
        settings.max_iter = max_iter
        sol = clarabel.DefaultSolver(P, q, A, np.asarray(rhs, float), cones, settings).solve()
        status = str(sol.status)
        x = np.asarray(sol.x, float)
        ok = status in _OK and np.all(np.isfinite(x))
        obj = float(q @ x) + self.cost_const if ok else float("inf")
        return ConicResult(ok, status, x, obj)
