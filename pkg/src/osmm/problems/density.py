"""Exponential series density estimation on [-1, 1]^2 with Legendre statistics."""

import logging
import math

import numpy as np
from numpy.polynomial import legendre

from ..oracle import Oracle
from ..structured import StructuredFunction
from . import rng
from .base import ProblemInstance, SampleSet

log = logging.getLogger(__name__)

MAX_DEGREE = 4
THETA_BOX = 30.0
MEANS = np.array([[1 / 3, 1 / 3], [1 / 3, -1 / 3], [-1 / 3, -1 / 3]])
WEIGHTS = np.array([0.4, 0.3, 0.3])
STD = 1.0 / 6.0


def exponents(max_degree=MAX_DEGREE):
    """Pairs ``(a, b)`` with ``1 <= a + b <= max_degree``, by total degree."""
    return [(a, d - a) for d in range(1, max_degree + 1) for a in range(d, -1, -1)]


def legendre_value(k, t):
    return legendre.legval(t, np.eye(k + 1)[k])


def legendre_deriv(k, t):
    return legendre.legval(t, legendre.legder(np.eye(k + 1)[k])) if k else np.zeros_like(t)


def statistics(Z, max_degree=MAX_DEGREE):
    """``phi(z)``, one column per product ``P_a(z1) P_b(z2)``."""
    Z = np.atleast_2d(Z)
    cols = [legendre_value(a, Z[:, 0]) * legendre_value(b, Z[:, 1])
            for a, b in exponents(max_degree)]
    return np.column_stack(cols)


def jacobians(Z, max_degree=MAX_DEGREE):
    """``D phi(z)`` stacked as an array of shape ``(len(Z), n, 2)``."""
    Z = np.atleast_2d(Z)
    d1 = [legendre_deriv(a, Z[:, 0]) * legendre_value(b, Z[:, 1]) for a, b in exponents(max_degree)]
    d2 = [legendre_value(a, Z[:, 0]) * legendre_deriv(b, Z[:, 1]) for a, b in exponents(max_degree)]
    return np.stack([np.column_stack(d1), np.column_stack(d2)], axis=2)


def grid(N_grid):
    """Cell midpoints of a ``sqrt(N) x sqrt(N)`` lattice on [-1, 1]^2 and the cell area."""
    side = math.isqrt(N_grid)
    if side * side != N_grid:
        raise ValueError("N_grid must be a perfect square")
    t = -1.0 + (2.0 * np.arange(side) + 1.0) / side
    Z = np.column_stack([np.repeat(t, side), np.tile(t, side)])
    return Z, 4.0 / N_grid


def draw_mixture(m, seed):
    """``m`` points from the three-component Gaussian mixture, rejected to the square."""
    s = rng.streams(seed)
    out = []
    have = 0
    while have < m:
        batch = max(2 * (m - have), 16)
        comp = np.searchsorted(np.cumsum(WEIGHTS), rng.uniform(s["weights"], batch), side="right")
        comp = np.minimum(comp, len(WEIGHTS) - 1)
        pts = MEANS[comp] + STD * rng.normal(s["data"], (batch, 2))
        pts = pts[np.all(np.abs(pts) <= 1.0, axis=1)]
        out.append(pts)
        have += len(pts)
    return np.vstack(out)[:m]


def density_oracle(Phi, cell, box=THETA_BOX, name="density") -> Oracle:
    """``log sum_i cell * exp(-phi_i^T theta)``; ``+inf`` outside the box."""
    n = Phi.shape[1]

    def logits(theta):
        return -(Phi @ theta)

    def value(theta):
        if np.max(np.abs(theta)) > box:
            return math.inf
        a = logits(theta)
        top = np.max(a)
        return float(top + math.log(cell * np.sum(np.exp(a - top))))

    def fun(theta):
        if np.max(np.abs(theta)) > box:
            return math.inf, None
        a = logits(theta)
        top = np.max(a)
        w = np.exp(a - top)
        total = np.sum(w)
        return float(top + math.log(cell * total)), -(Phi.T @ w) / total

    return Oracle(n, fun, value, name=name)


def gradient_form(Z, cell):
    """Riemann sum of ``D phi D phi^T``; the gradient-norm regularizer is ``theta^T Q theta``."""
    J = jacobians(Z)
    return cell * np.einsum("kia,kja->ij", J, J)


def build_density(samples, params, validation_samples=None, metadata=None):
    meta = metadata or {}
    lam = meta.get("lam", 0.0)
    reg = meta.get("regularizer", "l2")
    Z, cell = grid(meta["N_grid"])
    Phi = statistics(Z)
    n = Phi.shape[1]
    oracle = density_oracle(Phi, cell)
    if validation_samples is not None:
        # the quadrature grid is deterministic, so the twin is the same sum
        oracle.validation = density_oracle(Phi, cell, name="density-validation")
    c = statistics(samples.matrix).mean(axis=0)
    F = None
    if lam > 0:
        if reg == "l2":
            F = math.sqrt(2.0 * lam) * np.eye(n)
        elif reg == "grad":
            vals, vecs = np.linalg.eigh(gradient_form(Z, cell))
            F = vecs * np.sqrt(2.0 * lam * np.maximum(vals, 0.0))
        else:
            raise ValueError(f"unknown regularizer {reg!r}")
    g = StructuredFunction(n, c=c, F=F)
    return ProblemInstance("density", oracle, g, np.zeros(n), meta, samples, params,
                           validation_samples)


def gen_density(N_grid, m_data=2000, seed=0, lam=0.0, regularizer="l2", validation=False):
    meta = {"name": "density", "n": len(exponents()), "N": N_grid, "N_grid": N_grid,
            "m_data": m_data, "seed": seed, "lam": lam, "regularizer": regularizer,
            "theta_box": THETA_BOX}
    samples = SampleSet(draw_mixture(m_data, seed), None, seed,
                        "three-component Gaussian mixture rejected to [-1,1]^2")
    return build_density(samples, {}, samples if validation else None, meta)


def box_binding(theta, tol=1e-6):
    """Warn when the parameter box is (nearly) active at ``theta``."""
    hit = bool(np.max(np.abs(theta)) >= THETA_BOX * (1.0 - tol))
    if hit:
        log.warning("density parameter box |theta| <= %g is binding", THETA_BOX)
    return hit
