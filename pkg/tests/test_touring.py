import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circle_fixed_tour, split_boundary_violations
from xppn import geometry as geo
from xppn.bounds import check_collapse
from xppn.instance import Instance, generate
from xppn.touring import (FeasibilityError, SubproblemConfig, Tour, evaluate, read_solution,
                          solve_fixed_tour, write_solution)

TWO = Instance((geo.Circle((0, 0), 1), geo.Circle((5, 0), 1)))


def test_tour_canonical_form():
    assert Tour.from_sequence([3, 1, 0, 2]).order == (0, 1, 3, 2)
    assert Tour.from_sequence([2, 0, 1]).order == (0, 1, 2)
    assert Tour((0, 2, 1)).reversed().order == (0, 1, 2)
    assert not Tour((0, 2, 1)).is_canonical
    with pytest.raises(ValueError):
        Tour((0, 0, 1))
    assert Tour((0, 1)).edges() == [(0, 1), (1, 0)]
    assert Tour((0,)).edges() == []


def test_evaluate_examples():
    pts = {0: (1, 0), 1: (4, 0)}
    assert evaluate(TWO, Tour((0, 1)), pts, pts).cost == pytest.approx(6)
    sol = evaluate(TWO, Tour((0, 1)), {0: (-1, 0), 1: (4, 0)}, pts)
    # inner 2, out (1,0)->(4,0) is 3, back (4,0)->(-1,0) is 5
    assert sol.cost == pytest.approx(2 + 3 + 5)
    three = Instance(tuple(geo.Circle((x, 0), 1) for x in (0, 5, 10)))
    entry = {0: (1, 0), 1: (4, 0), 2: (9, 0)}
    exit_ = {0: (1, 0), 1: (6, 0), 2: (9, 0)}
    sol = evaluate(three, Tour((0, 1, 2)), entry, exit_)
    assert sol.cost == pytest.approx(sum(sol.out_costs.values()) + sum(sol.in_costs.values()))
    assert sol.cost == pytest.approx(3 + 2 + 3 + 8)


def test_evaluate_rejects_outside_points():
    with pytest.raises(FeasibilityError):
        evaluate(TWO, Tour((0, 1)), {0: (2, 0), 1: (4, 0)}, {0: (1, 0), 1: (4, 0)})


def test_two_circles():
    sol = solve_fixed_tour(TWO, Tour((0, 1)))
    assert sol.cost == pytest.approx(6, abs=1e-7)
    assert np.allclose(sol.entry[0], (1, 0), atol=1e-6) and np.allclose(sol.exit[1], (4, 0), atol=1e-6)


def test_common_point_costs_nothing():
    inst = Instance((geo.Circle((1, 0), 1.5), geo.Circle((-1, 0.5), 1.5), geo.Circle((0, -1), 1.2)))
    sol = solve_fixed_tour(inst, Tour((0, 1, 2)))
    assert sol.cost <= 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_random_circles_match_grid_oracle(seed):
    inst = generate(4, 2, 1, 100 + seed)
    tour = Tour((0, 2, 1, 3))
    sol = solve_fixed_tour(inst, tour)
    ref = circle_fixed_tour([e.center for e in inst.elements], [e.radius for e in inst.elements],
                            tour.order)
    assert abs(sol.cost - ref) <= 5e-3 * ref
    assert sol.cost <= ref + 1e-6


def _chain_circle_oracle(chain, circle, f, grid=121, angles=720):
    """Dense grid over both chain parameters and the circle boundary."""
    n = chain.n_segments
    lam = np.linspace(0, n, grid)
    P = np.array([geo.chain_point_at(chain, x) for x in lam])
    th = 2 * np.pi * np.arange(angles) / angles
    Q = np.asarray(circle.center) + circle.radius * np.stack([np.cos(th), np.sin(th)], 1)
    # leave the chain at exit a, visit the circle, come back to entry b
    to_q = np.linalg.norm(P[:, None] - Q[None], axis=2)  # (grid, angles)
    best = math.inf
    for i in range(grid):
        through = (to_q[i][None, :] + to_q).min(axis=1)  # exit i, entry j
        inner = f * np.linalg.norm(P[i] - P, axis=1)
        ok = np.abs(lam[i] - lam) >= chain.coverage * n - 1e-12
        if ok.any():
            best = min(best, float((through + inner)[ok].min()))
    return best


@pytest.mark.parametrize("alpha,f", [(0.0, 1.0), (0.4, 1.0), (0.7, 0.3), (1.0, 2.0)])
def test_chain_against_dense_grid(alpha, f):
    chain = geo.Chain(((0, 0), (4, 0), (4, 3), (8, 5)), coverage=alpha, discount=f)
    circle = geo.Circle((2, 6), 1.0)
    inst = Instance((chain, circle))
    sol = solve_fixed_tour(inst, Tour((0, 1)))
    ref = _chain_circle_oracle(chain, circle, f)
    assert sol.cost <= ref + 1e-7
    assert sol.cost >= ref * (1 - 5e-3) - 1e-6
    l1, l2 = sol.lam[0]
    assert abs(l1 - l2) >= alpha * 3 - 1e-6


def test_union_picks_best_member():
    u = geo.UnionSoc((geo.Circle((0, 0), 1), geo.Circle((10, 0), 1)))
    inst = Instance((u, geo.Circle((14, 0), 1), geo.Circle((14, 4), 1)))
    sol = solve_fixed_tour(inst, Tour((0, 1, 2)))
    alone = solve_fixed_tour(Instance((geo.Circle((10, 0), 1),) + inst.elements[1:]), Tour((0, 1, 2)))
    assert sol.cost == pytest.approx(alone.cost, abs=1e-6)


small = st.tuples(st.integers(3, 5), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10**6))


@settings(max_examples=25)
@given(small)
def test_solution_is_feasible_and_history_monotone(args):
    size, r, mode, seed = args
    inst = generate(size, r, mode, seed)
    tour = Tour(tuple(range(size)))
    sol = solve_fixed_tour(inst, tour)
    # re-evaluating checks membership and coverage from scratch
    again = evaluate(inst, tour, sol.entry, sol.exit, sol.lam, tol=1e-6)
    assert again.cost == pytest.approx(sol.cost, abs=1e-9)
    h = sol.history
    assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))
    rev = solve_fixed_tour(inst, tour.reversed())
    assert rev.cost == pytest.approx(sol.cost, abs=1e-7 * max(1.0, sol.cost))


@settings(max_examples=25)
@given(st.integers(3, 6), st.integers(1, 4), st.integers(1, 2), st.integers(0, 10**6))
def test_convex_unit_discount_collapses_to_boundary(size, r, mode, seed):
    inst = generate(size, r, mode, seed)
    sol = solve_fixed_tour(inst, Tour(tuple(range(size))))
    assert not check_collapse(inst, sol, 1e-5)
    # interior points are only legitimate when the neighbours sit inside the element
    assert not split_boundary_violations(inst, sol, 1e-4)[0]


@given(st.integers(0, 10**6))
def test_objective_is_convex_along_segments(seed):
    rng = np.random.default_rng(seed)
    inst = generate(4, 3, 2, seed)
    tour = Tour((0, 1, 2, 3))

    def random_points():
        out = {}
        for v, e in enumerate(inst.elements):
            w = rng.dirichlet(np.ones(len(e.vertices)))
            out[v] = tuple(w @ np.asarray(e.vertices))
        return out

    e1, x1, e2, x2 = random_points(), random_points(), random_points(), random_points()
    mid = lambda a, b: {v: tuple((np.asarray(a[v]) + np.asarray(b[v])) / 2) for v in a}
    c1 = evaluate(inst, tour, e1, x1).cost
    c2 = evaluate(inst, tour, e2, x2).cost
    cm = evaluate(inst, tour, mid(e1, e2), mid(x1, x2)).cost
    assert cm <= (c1 + c2) / 2 + 1e-9


def test_node_budget_marks_approximate():
    inst = generate(5, 3, 3, 2)
    sol = solve_fixed_tour(inst, Tour(tuple(range(5))), SubproblemConfig(node_limit=1))
    assert sol.status == "approximate" and sol.approximate
    full = solve_fixed_tour(inst, Tour(tuple(range(5))))
    assert full.cost <= sol.cost + 1e-9


def test_solution_document_round_trip():
    inst = generate(4, 2, 4, 5)
    sol = solve_fixed_tour(inst, Tour((0, 1, 2, 3)))
    text = write_solution(sol)
    back = read_solution(text, inst)
    assert back.cost == pytest.approx(sol.cost, abs=1e-9)
    assert write_solution(back).split("\n")[2:] == text.split("\n")[2:]
    with pytest.raises(ValueError):
        read_solution(text, generate(5, 2, 4, 5))
