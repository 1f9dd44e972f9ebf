import math

import numpy as np
import pytest

from osmm.oracle import (NonFiniteOracle, Oracle, StencilLeftDomain, gradient_check,
                         quadratic_oracle)


def test_quadratic_oracle_and_counters():
    o = quadratic_oracle([1.0, -2.0], scale=3.0)
    ev = o.evaluate(np.zeros(2))
    assert ev.value == 7.5
    np.testing.assert_array_equal(ev.gradient, [-3.0, 6.0])
    assert o.value(np.array([1.0, -2.0])) == 0.0
    assert (o.grad_calls, o.value_calls) == (1, 1)
    o.reset_counters()
    assert (o.grad_calls, o.value_calls) == (0, 0)


def test_outside_domain_is_inf():
    o = Oracle(1, lambda x: (math.inf, None) if x[0] <= 0 else (-math.log(x[0]), -1 / x))
    ev = o.evaluate(np.array([-1.0]))
    assert not ev.finite and ev.gradient is None
    assert o.value(np.array([-1.0])) == math.inf


@pytest.mark.parametrize("bad", [(math.nan, np.zeros(1)), (-math.inf, np.zeros(1)),
                                 (0.0, np.array([math.nan])), (0.0, np.zeros(2))])
def test_rejects_non_finite(bad):
    with pytest.raises(NonFiniteOracle):
        Oracle(1, lambda x: bad).evaluate(np.zeros(1))


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        quadratic_oracle(np.zeros(3)).value(np.zeros(2))


def test_gradient_check_spots_wrong_gradient():
    good = quadratic_oracle(np.ones(4))
    assert gradient_check(good, np.zeros(4)).error < 1e-8
    bad = Oracle(2, lambda x: (float(x @ x), np.array([2 * x[0], 0.0])))
    chk = gradient_check(bad, np.ones(2))
    assert chk.index == 1 and chk.error == pytest.approx(2.0 / 1.0, rel=1e-6)
    assert bad.value_calls == 0 and bad.grad_calls == 0


def test_gradient_check_leaves_domain():
    o = Oracle(1, lambda x: (math.inf, None) if x[0] <= 0 else (-math.log(x[0]), -1 / x))
    with pytest.raises(StencilLeftDomain):
        gradient_check(o, np.array([1e-7]))
