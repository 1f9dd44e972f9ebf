"""Seeded instance generators for the four experiments and risk primitives."""

import numpy as np

from .base import ProblemInstance, SampleSet
from .cvar import black_scholes, build_cvar, gen_cvar_portfolio
from .density import build_density, gen_density
from .kelly import build_kelly, gen_kelly
from .newsvendor import build_newsvendor, gen_newsvendor
from .risk import empirical_risks

BUILDERS = {
    "kelly": build_kelly,
    "cvar": build_cvar,
    "density": build_density,
    "newsvendor": build_newsvendor,
}


def generate(name, n=None, num_samples=None, seed=0, validation=False, **kw):
    """Build an instance by name with CLI-style size arguments.

    ``n`` is the number of assets (kelly), stocks (cvar) or products
    (newsvendor); density ignores it.  ``num_samples`` is ``N`` (the grid
    size for density).
    """
    if name == "kelly":
        return gen_kelly(n or 50, num_samples or 20000, seed, validation=validation)
    if name == "cvar":
        return gen_cvar_portfolio(n or 20, num_samples or 20000, seed, validation=validation, **kw)
    if name == "density":
        return gen_density(num_samples or 10000, seed=seed, validation=validation, **kw)
    if name == "newsvendor":
        return gen_newsvendor(n or 40, num_samples or 20000, seed, validation=validation, **kw)
    raise ValueError(f"unknown problem {name!r}")


def interior_points(inst: ProblemInstance, count, seed=0):
    """Random points well inside the domain of the oracle, for gradient checks."""
    gen = np.random.default_rng(seed)
    n = inst.n
    if inst.name == "kelly":
        return gen.dirichlet(np.ones(n), count)
    if inst.name == "newsvendor":
        q_max = inst.params["q_max"]
        q = gen.uniform(0.05, 0.95, (count, n - 1)) * q_max
        return np.column_stack([q, gen.uniform(0.05, 1.0, count)])
    if inst.name == "density":
        return gen.uniform(-1.0, 1.0, (count, n))
    return inst.x0 + 0.05 * gen.standard_normal((count, n))


__all__ = [
    "ProblemInstance", "SampleSet", "BUILDERS", "generate", "interior_points",
    "black_scholes", "empirical_risks",
    "gen_kelly", "gen_cvar_portfolio", "gen_density", "gen_newsvendor",
]
