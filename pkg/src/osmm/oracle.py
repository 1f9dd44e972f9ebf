"""Value/gradient access to the oracle part ``f`` of the objective."""

from dataclasses import dataclass
import math
from typing import Callable, Optional

import numpy as np


class NonFiniteOracle(ArithmeticError):
    pass


class StencilLeftDomain(ValueError):
    pass


@dataclass(frozen=True)
class OracleEval:
    value: float
    gradient: Optional[np.ndarray] = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


class Oracle:
    """Wraps a callback ``x -> (value, gradient)``.

    ``fun`` must return ``(inf, None)`` outside the domain of ``f``.  An
    optional ``value_fun`` computes the value alone (used by the line
    search); when missing the gradient is computed and discarded.

    ``validation`` is an optional twin oracle built from independent samples.
    """

    def __init__(self, dim: int, fun: Callable, value_fun: Optional[Callable] = None,
                 validation: Optional["Oracle"] = None, smooth: bool = True, name: str = ""):
        self.dim = int(dim)
        self._fun = fun
        self._value_fun = value_fun
        self.validation = validation
        self.smooth = smooth
        self.name = name
        self.value_calls = 0
        self.grad_calls = 0

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected point of shape ({self.dim},), got {x.shape}")
        return x

    @staticmethod
    def _check_value(value):
        value = float(value)
        if math.isnan(value) or value == -math.inf:
            raise NonFiniteOracle(f"oracle returned {value}")
        return value

    def evaluate(self, x) -> OracleEval:
        x = self._check_dim(x)
        self.grad_calls += 1
        value, grad = self._fun(x)
        value = self._check_value(value)
        if value == math.inf:
            return OracleEval(math.inf, None)
        grad = np.asarray(grad, dtype=float)
        if grad.shape != (self.dim,) or not np.all(np.isfinite(grad)):
            raise NonFiniteOracle("oracle gradient is not a finite vector of the right size")
        return OracleEval(value, grad)

    def value(self, x) -> float:
        x = self._check_dim(x)
        self.value_calls += 1
        if self._value_fun is not None:
            return self._check_value(self._value_fun(x))
        return self._check_value(self._fun(x)[0])

    def reset_counters(self):
        self.value_calls = 0
        self.grad_calls = 0


@dataclass(frozen=True)
class GradientCheck:
    error: float
    index: int

    def __float__(self):
        return self.error


def gradient_check(oracle: Oracle, x, h: float = 1e-6) -> GradientCheck:
    """Central-difference check of the oracle gradient at ``x``.

    Returns the largest ``|fd_j - g_j| / (1 + |g_j|)`` and the coordinate
    where it occurs.  Counters of ``oracle`` are left untouched.
    """
    counts = (oracle.value_calls, oracle.grad_calls)
    x = np.asarray(x, dtype=float)
    ev = oracle.evaluate(x)
    if not ev.finite:
        raise StencilLeftDomain("base point is outside the domain")
    errs = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fp, fm = oracle.value(x + e), oracle.value(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise StencilLeftDomain(f"stencil along coordinate {j} leaves the domain")
        fd = (fp - fm) / (2 * h)
        errs[j] = abs(fd - ev.gradient[j]) / (1 + abs(ev.gradient[j]))
    oracle.value_calls, oracle.grad_calls = counts
    j = int(np.argmax(errs)) if errs.size else 0
    return GradientCheck(float(errs[j]) if errs.size else 0.0, j)


def quadratic_oracle(center, scale=1.0) -> Oracle:
    """``f(x) = (scale/2) ||x - center||^2``; handy for tests and smoke runs."""
    center = np.asarray(center, dtype=float)

    def fun(x):
        d = x - center
        return 0.5 * scale * float(d @ d), scale * d

    return Oracle(center.size, fun, name="quadratic")
