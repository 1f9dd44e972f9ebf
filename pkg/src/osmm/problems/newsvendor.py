"""Vector news vendor minimizing the entropic value-at-risk of the loss."""

import math

import numpy as np
from scipy.special import logsumexp

from ..oracle import Oracle
from ..structured import HingeBudget, StructuredFunction
from . import rng
from .base import ProblemInstance, SampleSet

ALPHA_FLOOR = 1e-6
KAPPA = 0.5


def production_cost(q, a, b, kappa=KAPPA):
    """``a^T q + kappa a^T (q - b)_+``."""
    return float(a @ q + kappa * a @ np.maximum(q - b, 0.0))


def newsvendor_model(n, seed):
    s = rng.streams(seed)["model"]
    mu = rng.uniform(s, 2 * n, -0.2, 0.0)
    F = rng.normal(s, (2 * n, 5))
    a = rng.uniform(s, n, 0.2, 0.9)
    b = rng.uniform(s, n, 0.01, 0.03)
    return {"mu": mu, "factor": F, "a": a, "b": b, "q_max": 5.0 * b}


def draw_newsvendor(params, N, seed):
    """Rows ``(d, p) = exp(z)`` with ``z ~ N(mu, 0.1 F F^T)``."""
    F = params["factor"]
    w = rng.normal(rng.streams(seed)["data"], (N, F.shape[1]))
    z = params["mu"] + math.sqrt(0.1) * (w @ F.T)
    return SampleSet(np.exp(z), None, seed, "lognormal demand and price")


def evar_value(losses, alpha, eta):
    """``alpha log(mean(exp(losses / alpha)) / (1 - eta))`` computed stably."""
    N = losses.size
    return float(alpha * (logsumexp(losses / alpha) - math.log((1.0 - eta) * N)))


def evar_oracle(samples: SampleSet, a, b, eta, with_cost=False, name="newsvendor") -> Oracle:
    """EVaR of the sampled loss ``-p^T min(q, d)`` as a function of ``(q, alpha)``.

    With ``with_cost`` the deterministic production cost ``phi(q)`` is
    included in each loss.  EVaR is translation equivariant, so that equals
    the default oracle plus ``phi(q)``; the generator keeps ``phi`` in ``g``,
    where its kinks at ``q = b`` are handled exactly by the subproblem.
    """
    n = a.size
    D, P = samples.matrix[:, :n], samples.matrix[:, n:]
    log_scale = math.log((1.0 - eta) * samples.N)

    def losses(q):
        ell = -np.sum(P * np.minimum(q, D), axis=1)
        return ell + production_cost(q, a, b) if with_cost else ell

    def value(u):
        alpha = u[n]
        if alpha < ALPHA_FLOOR:
            return math.inf
        return float(alpha * (logsumexp(losses(u[:n]) / alpha) - log_scale))

    def fun(u):
        q, alpha = u[:n], u[n]
        if alpha < ALPHA_FLOOR:
            return math.inf, None
        ell = losses(q)
        lse = logsumexp(ell / alpha)
        w = np.exp(ell / alpha - lse)
        grad = np.empty(n + 1)
        grad[:n] = -((w[:, None] * P) * (q < D)).sum(axis=0)
        if with_cost:
            grad[:n] += a * (1.0 + KAPPA * (q > b))
        grad[n] = (lse - log_scale) - float(w @ ell) / alpha
        return float(alpha * (lse - log_scale)), grad

    # kinks of min(q, d_i) sit on sample points only: smooth almost everywhere
    return Oracle(n + 1, fun, value, smooth=not with_cost, name=name)


def _fit_budget(q, a, b, cap):
    """Largest ``s`` in [0, 1] with ``phi(s q) <= cap``, by bisection."""
    if production_cost(q, a, b) <= cap:
        return q
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if production_cost(mid * q, a, b) <= cap:
            lo = mid
        else:
            hi = mid
    return lo * q


def build_newsvendor(samples, params, validation_samples=None, metadata=None):
    meta = metadata or {}
    eta, cap = meta.get("eta", 0.9), meta.get("phi_max", 1.0)
    a, b, q_max = params["a"], params["b"], params["q_max"]
    n = a.size
    oracle = evar_oracle(samples, a, b, eta)
    if validation_samples is not None:
        oracle.validation = evar_oracle(validation_samples, a, b, eta,
                                        name="newsvendor-validation")
    lower = np.zeros(n + 1)
    lower[n] = ALPHA_FLOOR
    upper = np.append(q_max, np.inf)
    g = StructuredFunction(n + 1, lower=lower, upper=upper,
                           hinge=HingeBudget(np.arange(n), a, b, cap, KAPPA, weight=1.0))
    q0 = _fit_budget(q_max / 2.0, a, b, cap)
    D, P = samples.matrix[:, :n], samples.matrix[:, n:]
    ell = -np.sum(P * np.minimum(q0, D), axis=1) + production_cost(q0, a, b)
    x0 = np.append(q0, max(float(np.std(ell)), ALPHA_FLOOR))
    return ProblemInstance("newsvendor", oracle, g, x0, meta, samples, params, validation_samples)


def gen_newsvendor(n, N, seed, eta=0.9, phi_max=1.0, validation=False):
    if n < 1 or N < 1:
        raise ValueError("need n >= 1 and N >= 1")
    params = newsvendor_model(n, seed)
    twin = draw_newsvendor(params, N, seed + 1) if validation else None
    meta = {"name": "newsvendor", "n": n + 1, "N": N, "seed": seed, "eta": eta,
            "phi_max": phi_max}
    return build_newsvendor(draw_newsvendor(params, N, seed), params, twin, meta)
