"""Empirical VaR, CVaR and EVaR of a loss sample."""

import math

import numpy as np
from scipy.special import logsumexp

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fun, lo, hi, tol=1e-10, max_iter=500):
    """Minimizer of a convex scalar function on ``[lo, hi]``."""
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def var(losses, eta):
    """Smallest ``v`` with ``P(loss <= v) >= eta``."""
    x = np.sort(np.asarray(losses, dtype=float))
    k = max(math.ceil(eta * x.size - 1e-12) - 1, 0)
    return float(x[k])


def cvar_objective(losses, alpha, eta):
    return float(alpha + np.mean(np.maximum(losses - alpha, 0.0)) / (1.0 - eta))


def evar_objective(losses, alpha, eta):
    if alpha <= 0:
        return float(np.max(losses))
    return float(alpha * (logsumexp(losses / alpha) - math.log((1.0 - eta) * losses.size)))


def cvar(losses, eta, tol=1e-10):
    x = np.asarray(losses, dtype=float)
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        return lo
    alpha = golden_section(lambda a: cvar_objective(x, a, eta), lo, hi, tol)
    # the objective is piecewise linear with a kink at the quantile
    return min(cvar_objective(x, alpha, eta), cvar_objective(x, var(x, eta), eta))


def evar(losses, eta, tol=1e-10):
    x = np.asarray(losses, dtype=float)
    top, mean = float(np.max(x)), float(np.mean(x))
    if top == mean:
        return top
    # for alpha beyond this the value already exceeds max(losses) = value at 0+
    hi = (top - mean) / math.log(1.0 / (1.0 - eta))
    alpha = golden_section(lambda a: evar_objective(x, a, eta), 0.0, hi, tol)
    return min(evar_objective(x, alpha, eta), top)


def empirical_risks(losses, eta):
    """``(VaR, CVaR, EVaR)`` of the empirical distribution of ``losses``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    x = np.asarray(losses, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("losses must be a nonempty finite sample")
    return var(x, eta), cvar(x, eta), evar(x, eta)
