import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osmm.structured import (HingeBudget, InfeasibleBase, StructuredFunction, canonicalize,
                             lifted_feasible, project, sample_feasible, subgradient_valid)
from reference import simplex_projection


def test_cost_and_violation_frozen():
    g = StructuredFunction(3, c=[1.0, 0.0, -1.0], F=np.eye(3)[:, :1], lower=-1.0, upper=2.0)
    x = np.array([2.0, 0.5, 1.0])
    assert g.eval(x) == pytest.approx(1.0 + 2.0)
    assert g.violation(np.array([3.0, 0.0, 0.0])) == pytest.approx(1.0 / 3.0)
    assert g.eval(np.array([3.0, 0.0, 0.0])) == math.inf


def test_atoms_violation():
    g = StructuredFunction(3, simplex=[0, 1], nonneg=[2], l1_index=[0, 1, 2], l1_radius=2.0,
                           A_eq=[[0.0, 0.0, 1.0]], b_eq=[0.5], C_ineq=[[1.0, 0.0, 0.0]],
                           d_ineq=[0.8])
    assert g.eval(np.array([0.5, 0.5, 0.5])) == 0.0
    assert g.eval(np.array([0.9, 0.1, 0.5])) == math.inf   # C_ineq
    assert g.eval(np.array([0.6, 0.6, 0.5])) == math.inf   # simplex sum
    assert g.eval(np.array([0.5, 0.5, 0.6])) == math.inf   # equality


def test_hinge_cost_and_budget():
    h = HingeBudget([0, 1], [1.0, 2.0], [0.5, 0.5], cap=3.0, kappa=0.5, weight=2.0)
    x = np.array([1.0, 0.25])
    assert h.value(x) == pytest.approx(1.0 + 0.5 + 0.5 * 0.5)
    g = StructuredFunction(2, hinge=h)
    assert g.eval(x) == pytest.approx(2.0 * 1.75)
    assert g.eval(np.array([2.0, 1.0])) == math.inf
    with pytest.raises(ValueError):
        HingeBudget([0], [-1.0], [0.0], 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_simplex_projection_matches_sorting(seed, n):
    p = np.random.default_rng(seed).standard_normal(n) * 3
    g = StructuredFunction(n, simplex=np.arange(n))
    np.testing.assert_allclose(project(g, p), simplex_projection(p), atol=1e-8)


def test_l1_ball_projection_frozen():
    g = StructuredFunction(2, l1_index=[0, 1], l1_radius=1.0)
    np.testing.assert_allclose(project(g, np.array([2.0, 0.5])), [1.0, 0.0], atol=1e-8)
    np.testing.assert_allclose(project(g, np.array([0.3, -0.2])), [0.3, -0.2], atol=1e-8)


@pytest.mark.parametrize("split", [True, False])
def test_lift_is_feasible(split):
    g = StructuredFunction(3, l1_index=[0, 2], l1_radius=2.0, lower=-5.0,
                           hinge=HingeBudget([1], [1.0], [0.2], cap=1.0))
    pieces = canonicalize(g, include_l1_split=split)
    x = np.array([0.7, 0.5, -1.0])
    u = pieces.lift(x)
    assert u.size == pieces.n_var
    assert lifted_feasible(pieces, x)
    assert not lifted_feasible(pieces, np.array([0.7, 0.5, -1.5]))
    np.testing.assert_array_equal(pieces.restrict(u), x)


def test_sample_feasible_and_infeasible_projection():
    g = StructuredFunction(4, simplex=np.arange(4))
    pts = sample_feasible(g, 10, 0, spread=3.0)
    assert pts.shape == (10, 4)
    assert max(g.violation(p) for p in pts) <= 1e-8
    bad = StructuredFunction(1, lower=1.0, upper=0.0)
    with pytest.raises(InfeasibleBase):
        project(bad, np.zeros(1))


def test_subgradient_valid_separates_good_from_bad():
    g = StructuredFunction(2, c=[1.0, 0.0], lower=0.0, upper=1.0)
    x = np.array([0.0, 0.5])
    good = np.array([0.0, 0.0]) + np.array([1.0, 0.0]) + np.array([-3.0, 0.0])  # normal cone at x1=0
    assert subgradient_valid(g, x, good, rng=0) <= 1e-12
    assert subgradient_valid(g, x, np.array([1.0, 1.0]), rng=0) > 1e-3
