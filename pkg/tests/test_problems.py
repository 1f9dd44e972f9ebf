import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from osmm import problems
from osmm.problems import density, io, newsvendor, risk, rng
from osmm.problems.cvar import black_scholes
from reference import cvar_brute, evar_brute

# (n, first sample row[:3], f(x0), x0[:3]) for seed 0 at small sizes
FROZEN = {
    "kelly": (dict(n=5, num_samples=100), 5,
              [0.07148649743644758, 1.0632801913382057, 1.4124099023932797],
              0.09764968705772172, [0.2, 0.2, 0.2]),
    "cvar": (dict(n=4, num_samples=100), 13,
             [0.4141134326233099, 0.05506806760851883, 1.0065014402725172],
             -0.3936916631834197, [0.25, 0.25, 0.25]),
    "density": (dict(num_samples=100), 14, [0.5265461971456933, -0.6822719823514579],
                1.3862943611198906, [0.0, 0.0, 0.0]),
    "newsvendor": (dict(n=3, num_samples=100), 4,
                   [0.21434191370353772, 1.2771199133337052, 0.5831941268598549],
                   0.07481643696383629,
                   [0.03255409019988631, 0.05609711967430292, 0.03409284062861874]),
}


def test_streams_frozen():
    s = rng.streams(0)
    np.testing.assert_allclose(rng.uniform(s["data"], 3), [0.94293755, 0.31633715, 0.72234259],
                               atol=1e-8)
    np.testing.assert_allclose(rng.normal(s["model"], 3), [-1.41090606, -1.28569526, -0.12211433],
                               atol=1e-8)


def test_box_muller_moments():
    z = rng.normal(rng.streams(7)["data"], 200001)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1.0) < 0.01


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_generators_frozen(name):
    kw, n, row, f0, x0 = FROZEN[name]
    inst = problems.generate(name, seed=0, **kw)
    assert inst.n == n and inst.name == name
    np.testing.assert_allclose(inst.samples.matrix[0, :len(row)], row, rtol=1e-12)
    assert inst.oracle.value(inst.x0) == pytest.approx(f0, rel=1e-10)
    np.testing.assert_allclose(inst.x0[:3], x0, rtol=1e-12)
    assert math.isfinite(inst.g.eval(inst.x0))


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_seeds_and_validation_twin(name):
    kw = FROZEN[name][0]
    a = problems.generate(name, seed=1, **kw)
    b = problems.generate(name, seed=1, validation=True, **kw)
    c = problems.generate(name, seed=2, **kw)
    np.testing.assert_array_equal(a.samples.matrix, b.samples.matrix)
    assert not np.array_equal(a.samples.matrix, c.samples.matrix)
    twin = b.oracle.validation
    assert twin is not None
    assert math.isfinite(twin.value(b.x0))


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_io_round_trip(name, tmp_path):
    kw = FROZEN[name][0]
    inst = problems.generate(name, seed=0, validation=True, **kw)
    path = tmp_path / f"{name}.npz"
    io.save_instance(path, inst)
    back = io.load_instance(path)
    np.testing.assert_array_equal(back.samples.matrix, inst.samples.matrix)
    np.testing.assert_array_equal(back.x0, inst.x0)
    assert back.oracle.value(back.x0) == inst.oracle.value(inst.x0)
    assert back.oracle.validation.value(back.x0) == inst.oracle.validation.value(inst.x0)
    assert back.g.eval(back.x0) == inst.g.eval(inst.x0)
    assert back.metadata == inst.metadata


def test_unknown_problem():
    with pytest.raises(ValueError):
        problems.generate("nope")


def test_risk_frozen():
    v, c, e = risk.empirical_risks(np.array([1.0, 2.0, 3.0, 4.0, 10.0]), 0.5)
    assert v == 3.0
    assert c == pytest.approx(6.2, abs=1e-9)
    assert c <= e <= 10.0
    with pytest.raises(ValueError):
        risk.empirical_risks(np.ones(3), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=40), st.sampled_from([0.5, 0.8, 0.95]))
def test_risk_ordering_property(xs, eta):
    x = np.array(xs)
    v, c, e = risk.empirical_risks(x, eta)
    assert v <= c + 1e-9 and c <= e + 1e-9 and e <= x.max() + 1e-9
    assert c == pytest.approx(cvar_brute(x, eta), abs=1e-6)
    assert e == pytest.approx(evar_brute(x, eta), abs=1e-6 * (1 + abs(e)))


def test_black_scholes_frozen_and_validation():
    assert black_scholes(1.0, 1.0, 0.2) == pytest.approx(0.07965567455405798, rel=1e-14)
    assert black_scholes(2.0, 1.0, 0.0) == 1.0
    assert black_scholes(2.0, 1.0, 0.0, "put") == 0.0
    with pytest.raises(ValueError):
        black_scholes(1.0, 1.0, 0.2, "straddle")


def test_cvar_oracle_matches_empirical_cvar():
    inst = problems.generate("cvar", n=3, num_samples=500, seed=0)
    x = inst.x0.copy()
    m = inst.n - 1
    R = inst.samples.matrix
    returns = problems.cvar.asset_returns(R, inst.params)
    losses = -(returns @ x[:m])
    best = risk.cvar(losses, inst.metadata["eta"])
    x[m] = risk.var(losses, inst.metadata["eta"])
    assert inst.oracle.value(x) == pytest.approx(best, abs=1e-10)


def test_newsvendor_cost_moves_between_f_and_g():
    inst = problems.generate("newsvendor", n=3, num_samples=300, seed=0)
    p = inst.params
    eta = inst.metadata["eta"]
    full = newsvendor.evar_oracle(inst.samples, p["a"], p["b"], eta, with_cost=True)
    for x in problems.interior_points(inst, 5, seed=0):
        q = x[:-1]
        split = inst.oracle.value(x) + newsvendor.production_cost(q, p["a"], p["b"])
        assert full.value(x) == pytest.approx(split, rel=1e-12, abs=1e-12)
        assert inst.g.cost(x) == pytest.approx(newsvendor.production_cost(q, p["a"], p["b"]))


def test_density_pieces():
    assert len(density.exponents()) == 14
    Z, cell = density.grid(16)
    assert Z.shape == (16, 2) and cell == 0.25
    with pytest.raises(ValueError):
        density.grid(15)
    inst = problems.generate("density", num_samples=400, seed=0)
    theta = np.full(inst.n, 31.0)
    assert inst.oracle.value(theta) == math.inf
    assert inst.oracle.value(np.zeros(inst.n)) == pytest.approx(math.log(4.0))
