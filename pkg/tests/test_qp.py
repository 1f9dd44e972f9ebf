import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osmm.qp import QpProblem, QpStatus, recession_value, solve
from reference import enumerate_qp


def test_frozen_box_qp():
    # min 1/2 ||x||^2 - (2, -3)'x  s.t. -1 <= x <= 1  ->  x = (1, -1)
    qp = QpProblem(c=[-2.0, 3.0], p_diag=[1.0, 1.0], C=np.vstack([np.eye(2), -np.eye(2)]),
                   d=np.ones(4))
    sol = solve(qp)
    assert sol.status == QpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [1.0, -1.0], atol=1e-10)
    np.testing.assert_allclose(sol.z, [1.0, 0.0, 0.0, 2.0], atol=1e-9)
    assert sol.objective == pytest.approx(-4.0, abs=1e-10)


def test_frozen_lp_with_equality():
    # min x1 + 2 x2  s.t. x1 + x2 = 1, x >= 0
    qp = QpProblem(c=[1.0, 2.0], A=[[1.0, 1.0]], b=[1.0], C=-np.eye(2), d=np.zeros(2))
    sol = solve(qp)
    assert sol.optimal
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-9)
    assert sol.objective == pytest.approx(1.0, abs=1e-9)


def test_infeasible():
    qp = QpProblem(c=[0.0], p_diag=[1.0], C=[[1.0], [-1.0]], d=[-1.0, -1.0])
    assert solve(qp).status == QpStatus.INFEASIBLE


def test_unbounded_lp():
    qp = QpProblem(c=[-1.0, 0.0], C=[[0.0, 1.0]], d=[1.0])
    assert recession_value(qp) < 0
    assert solve(qp).status == QpStatus.UNBOUNDED


def test_unconstrained_low_rank():
    F = np.array([[1.0], [1.0]])
    qp = QpProblem(c=[-1.0, -1.0], P_factor=F, C=np.vstack([np.eye(2), -np.eye(2)]),
                   d=np.full(4, 10.0))
    sol = solve(qp)
    assert sol.optimal
    assert sol.x.sum() == pytest.approx(1.0, abs=1e-9)


def test_rejects_bad_data():
    with pytest.raises(ValueError):
        QpProblem(c=[np.nan])
    with pytest.raises(ValueError):
        QpProblem(c=[0.0], p_diag=[-1.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_small_qp_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    m = int(rng.integers(0, 6))
    F = rng.standard_normal((n, n))
    diag = rng.uniform(0.1, 1.0, n)
    C = rng.standard_normal((m, n))
    d = C @ rng.standard_normal(n) + rng.uniform(0, 1, m)
    qp = QpProblem(c=rng.standard_normal(n), P_factor=F, p_diag=diag, C=C, d=d)
    sol = solve(qp)
    ref = enumerate_qp(qp.P(), qp.c, qp.A, qp.b, qp.C, qp.d)
    assert sol.optimal
    np.testing.assert_allclose(sol.x, ref, atol=1e-7)
    assert np.all(sol.z >= 0) and np.all(sol.s >= 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_lp_duality(seed):
    """Strong duality on bounded LPs: c'x = -b'y - d'z at the solution."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    C = np.vstack([rng.standard_normal((n, n)), np.eye(n), -np.eye(n)])
    d = np.concatenate([np.abs(rng.standard_normal(n)) + 0.1, np.ones(2 * n)])
    qp = QpProblem(c=rng.standard_normal(n), C=C, d=d)
    sol = solve(qp)
    assert sol.optimal
    assert qp.c @ sol.x == pytest.approx(-(qp.d @ sol.z), abs=1e-7)
