"""Kelly gambling: maximize the expected log return over the simplex."""

import math

import numpy as np

from ..oracle import Oracle
from ..structured import StructuredFunction
from . import rng
from .base import ProblemInstance, SampleSet


def kelly_model(n, seed):
    """Target mean returns ``rbar``, uniform on [0.9, 1.1]."""
    return {"rbar": rng.uniform(rng.streams(seed)["model"], n, 0.9, 1.1)}


def draw_kelly(params, N, seed):
    """Outcome probabilities and lognormal returns rescaled to mean ``rbar``."""
    s = rng.streams(seed)
    rbar = params["rbar"]
    pi = rng.uniform(s["weights"], N)
    pi /= pi.sum()
    R = np.exp(rng.normal(s["data"], (N, rbar.size)))
    R *= rbar / (pi @ R)
    return SampleSet(R, pi, seed, "lognormal returns scaled to mean returns in [0.9, 1.1]")


def kelly_oracle(samples: SampleSet, name="kelly") -> Oracle:
    R, pi = samples.matrix, samples.weights

    def value(x):
        wealth = R @ x
        if np.min(wealth) <= 0:
            return math.inf
        return -float(pi @ np.log(wealth))

    def fun(x):
        wealth = R @ x
        if np.min(wealth) <= 0:
            return math.inf, None
        return -float(pi @ np.log(wealth)), -(R.T @ (pi / wealth))

    return Oracle(R.shape[1], fun, value, name=name)


def build_kelly(samples, params, validation_samples=None, metadata=None):
    n = samples.matrix.shape[1]
    oracle = kelly_oracle(samples)
    if validation_samples is not None:
        oracle.validation = kelly_oracle(validation_samples, "kelly-validation")
    g = StructuredFunction(n, simplex=np.arange(n))
    return ProblemInstance("kelly", oracle, g, np.full(n, 1.0 / n), metadata or {},
                           samples, params, validation_samples)


def gen_kelly(n, N, seed, validation=False) -> ProblemInstance:
    if n < 2 or N < 1:
        raise ValueError("need n >= 2 and N >= 1")
    params = kelly_model(n, seed)
    twin = draw_kelly(params, N, seed + 1) if validation else None
    meta = {"name": "kelly", "n": n, "N": N, "seed": seed}
    return build_kelly(draw_kelly(params, N, seed), params, twin, meta)
