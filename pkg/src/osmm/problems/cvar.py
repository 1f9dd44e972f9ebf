"""CVaR portfolio over stocks plus one call and one put option per stock."""

import math

import numpy as np
from scipy.special import ndtr, ndtri

from ..oracle import Oracle
from ..structured import StructuredFunction
from . import rng
from .base import ProblemInstance, SampleSet


def black_scholes(forward, strike, vol, kind="call"):
    """Zero-discount Black-Scholes premium on a lognormal with total volatility ``vol``.

    ``vol = 0`` gives the intrinsic value of the forward.
    """
    scalar = all(np.ndim(a) == 0 for a in (forward, strike, vol))
    forward, strike, vol = np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float))
                                                 for a in (forward, strike, vol)))
    if kind not in ("call", "put"):
        raise ValueError("kind must be 'call' or 'put'")
    sign = 1.0 if kind == "call" else -1.0
    price = np.maximum(sign * (forward - strike), 0.0)
    pos = vol > 0
    if np.any(pos):
        F, K, s = forward[pos], strike[pos], vol[pos]
        d1 = (np.log(F / K) + 0.5 * s * s) / s
        d2 = d1 - s
        price[pos] = sign * (F * ndtr(sign * d1) - K * ndtr(sign * d2))
    return float(price[0]) if scalar else price


def cvar_model(m, seed):
    """Market model and option terms; depends on ``seed`` only."""
    sigma = 1.0 / math.sqrt(2.0)
    F = rng.normal(rng.streams(seed)["model"], (m, 5))
    var = sigma ** 2 * (1.0 + 0.2 * np.sum(F * F, axis=1))
    mu = 0.03 * np.sqrt(var) - 0.5 * var
    vol = np.sqrt(var)
    forward = np.exp(mu + 0.5 * var)
    strike_c = np.exp(mu + vol * ndtri(0.8))
    strike_p = np.exp(mu + vol * ndtri(0.2))
    return {
        "factor": F, "sigma": sigma, "mu": mu, "var": var, "forward": forward,
        "strike_call": strike_c, "strike_put": strike_p,
        "premium_call": black_scholes(forward, strike_c, vol, "call"),
        "premium_put": black_scholes(forward, strike_p, vol, "put"),
    }


def draw_cvar(params, N, seed):
    """``N`` price ratios ``omega`` with ``log omega ~ N(mu, sigma^2 (I + 0.2 F F^T))``."""
    s = rng.streams(seed)
    F, sigma, mu = params["factor"], params["sigma"], params["mu"]
    e = rng.normal(s["data"], (N, F.shape[0]))
    w = rng.normal(s["extra"], (N, F.shape[1]))
    omega = np.exp(mu + sigma * (e + math.sqrt(0.2) * (w @ F.T)))
    return SampleSet(omega, None, seed, "lognormal price ratios of the underlyings")


def asset_returns(omega, params):
    """Per-dollar payoffs ``r(omega)`` of the stocks, calls and puts."""
    calls = np.maximum(omega - params["strike_call"], 0.0) / params["premium_call"]
    puts = np.maximum(params["strike_put"] - omega, 0.0) / params["premium_put"]
    return np.hstack([omega, calls, puts])


def cvar_oracle(returns, eta, name="cvar") -> Oracle:
    """``alpha + mean((loss - alpha)_+) / (1 - eta)`` with ``loss = -r^T x``."""
    N, n = returns.shape
    scale = 1.0 / ((1.0 - eta) * N)

    def value(u):
        loss = -(returns @ u[:n])
        return float(u[n] + scale * np.sum(np.maximum(loss - u[n], 0.0)))

    def fun(u):
        loss = -(returns @ u[:n])
        tail = loss > u[n]
        val = u[n] + scale * np.sum(loss[tail] - u[n])
        grad = np.empty(n + 1)
        grad[:n] = -scale * returns[tail].sum(axis=0)
        grad[n] = 1.0 - scale * np.count_nonzero(tail)
        return float(val), grad

    return Oracle(n + 1, fun, value, smooth=False, name=name)


def build_cvar(samples, params, validation_samples=None, metadata=None):
    meta = metadata or {}
    eta, x_min, lev = meta.get("eta", 0.8), meta.get("x_min", -0.1), meta.get("L", 1.6)
    R = asset_returns(samples.matrix, params)
    N, n = R.shape
    m = n // 3
    oracle = cvar_oracle(R, eta)
    if validation_samples is not None:
        oracle.validation = cvar_oracle(asset_returns(validation_samples.matrix, params), eta,
                                        "cvar-validation")
    lower = np.full(n + 1, -np.inf)
    lower[:n] = x_min
    a = np.zeros(n + 1)
    a[:n] = 1.0
    g = StructuredFunction(n + 1, lower=lower, A_eq=a[None, :], b_eq=[1.0],
                           l1_index=np.arange(n), l1_radius=lev)
    x0 = np.zeros(n + 1)
    x0[:m] = 1.0 / m
    losses = -(R @ x0[:n])
    x0[n] = float(np.sort(losses)[max(math.ceil(eta * N) - 1, 0)])
    return ProblemInstance("cvar", oracle, g, x0, meta, samples, params, validation_samples)


def gen_cvar_portfolio(m, N, seed, eta=0.8, x_min=-0.1, L=1.6, validation=False):
    if m < 2 or N < 1:
        raise ValueError("need m >= 2 and N >= 1")
    params = cvar_model(m, seed)
    twin = draw_cvar(params, N, seed + 1) if validation else None
    meta = {"name": "cvar", "m": m, "n": 3 * m + 1, "N": N, "seed": seed,
            "eta": eta, "x_min": x_min, "L": L}
    return build_cvar(draw_cvar(params, N, seed), params, twin, meta)
