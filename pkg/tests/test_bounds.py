import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import circle_brute_force, sample_points
from xppn import geometry as geo
from xppn.benders import benders_solve
from xppn.bounds import (check_boundary, check_circle_hull, check_collapse, collapse_hints,
                         compute_bounds, lift_solution, preprocess)
from xppn.instance import Instance, generate
from xppn.touring import Tour, evaluate


def test_two_circle_bounds():
    b = compute_bounds(Instance((geo.Circle((0, 0), 1), geo.Circle((5, 0), 1))))
    assert b.m_out[0, 1] == pytest.approx(3, abs=1e-6)
    assert b.M_out[0, 1] == pytest.approx(7)
    assert np.allclose(b.M_in, [2, 2])
    assert b.big_M(1, 0) == b.big_M(0, 1)


def test_identical_squares_have_zero_lower_bound():
    sq = geo.Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    assert compute_bounds(Instance((sq, sq))).m_out[0, 1] == 0


@pytest.mark.parametrize("mode", [1, 2, 3, 4])
def test_sandwich_against_sampling(mode):
    inst = generate(6, 3, mode, 11)
    b = compute_bounds(inst)
    rng = np.random.default_rng(mode)
    S = [sample_points(e, 10_000, rng) for e in inst.elements]
    for v in range(6):
        d_in = np.linalg.norm(S[v] - S[v][::-1], axis=1)
        assert d_in.max() <= b.M_in[v] + 1e-9
        for w in range(v + 1, 6):
            d = np.linalg.norm(S[v] - rng.permutation(S[w]), axis=1)
            assert b.m_out[v, w] - 1e-9 <= d.min()
            assert d.max() <= b.M_out[v, w] + 1e-9


def test_preprocess_examples():
    a, big = geo.Circle((0, 0), 1), geo.Circle((0, 0), 5)
    red_inst, red = preprocess(Instance((a, big)))
    assert red.kept == (0,) and red.deleted == ((1, 0),)
    _, red = preprocess(Instance((geo.Circle((0, 0), 1), geo.Circle((10, 0), 1))))
    assert red.is_identity


def _nested_instance():
    return Instance((geo.Circle((0, 0), 6), geo.Circle((1, 0), 3), geo.Circle((1.5, 0), 1),
                     geo.Circle((20, 5), 2)), name="nested")


def test_nested_triple_keeps_innermost_and_optimum():
    inst = _nested_instance()
    red_inst, red = preprocess(inst)
    assert red.kept == (2, 3)
    full = circle_brute_force(inst)[0]
    reduced = circle_brute_force(red_inst)[0]
    assert reduced == pytest.approx(full, abs=1e-4)


def test_discounted_container_survives():
    inst = Instance((geo.Circle((0, 0), 5, discount=0.5), geo.Circle((0, 0), 1)))
    assert preprocess(inst)[1].is_identity


def test_equal_sets_drop_higher_index():
    c = geo.Circle((3, 3), 2)
    assert preprocess(Instance((c, c, geo.Circle((9, 9), 1))))[1].kept == (0, 2)


@given(st.integers(3, 6), st.integers(1, 4), st.integers(0, 10_000))
def test_preprocess_is_idempotent(size, r, seed):
    base = generate(size, r, 1, seed)
    # add a container around element 0 so something can be removed
    c0 = base[0]
    inst = Instance(base.elements + (geo.Circle(c0.center, c0.radius + 3),))
    once, red = preprocess(inst)
    assert len(once) <= len(inst)
    assert preprocess(once)[1].is_identity


def test_lift_solution_keeps_cost():
    inst = _nested_instance()
    red_inst, red = preprocess(inst)
    sol = benders_solve(red_inst).best
    lifted = lift_solution(inst, red, sol)
    assert len(lifted.tour) == len(inst)
    assert lifted.cost == pytest.approx(sol.cost, abs=1e-9)


def test_validators():
    inst = Instance((geo.Circle((0, 0), 1), geo.Circle((5, 0), 1)))
    good = evaluate(inst, Tour((0, 1)), {0: (1, 0), 1: (4, 0)}, {0: (1, 0), 1: (4, 0)})
    assert not check_collapse(inst, good) and not check_boundary(inst, good)
    assert not check_circle_hull(inst, good)
    bad = evaluate(inst, Tour((0, 1)), {0: (-1, 0), 1: (4.5, 0)}, {0: (1, 0), 1: (4.5, 0)})
    assert [v for v, _ in check_collapse(inst, bad)] == [0]
    assert [v for v, _ in check_boundary(inst, bad)] == [1, 1]  # entry and exit
    assert collapse_hints(Instance((geo.Circle((0, 0), 1, discount=0.5),
                                    geo.Chain(((0, 0), (1, 1)))))) == [False, False]
    assert math.isclose(bad.cost, 2 + 3.5 + 5.5)
