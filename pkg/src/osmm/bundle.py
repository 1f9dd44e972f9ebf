"""Limited-memory piecewise-affine (or piecewise-quadratic) minorant of ``f``."""

from collections import deque
from dataclasses import dataclass
import math

import numpy as np


class EmptyBundle(ValueError):
    pass


@dataclass(frozen=True)
class BundlePiece:
    anchor: np.ndarray
    value: float
    gradient: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.value) and np.all(np.isfinite(self.gradient))):
            raise ValueError("bundle pieces must be finite")


class Bundle:
    """The last ``memory`` tangent planes of ``f``, plus optional extras.

    ``rho`` > 0 turns every plane into a quadratic with curvature ``rho``
    (valid only when ``f`` is ``rho``-strongly convex).  ``box`` is a pair of
    arrays ``(lower, upper)`` containing the domain of ``f``, and ``floor`` a
    known constant lower bound on ``f``.
    """

    def __init__(self, memory=20, rho=0.0, box=None, floor=None):
        if memory < 1:
            raise ValueError("memory must be at least 1")
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        self.memory = int(memory)
        self.rho = float(rho)
        self.box = None if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
        self.floor = None if floor is None else float(floor)
        self.pieces = deque(maxlen=self.memory)

    def __len__(self):
        return len(self.pieces)

    def push(self, piece: BundlePiece):
        self.pieces.append(piece)
        return self

    def add(self, anchor, value, gradient):
        return self.push(BundlePiece(np.array(anchor, dtype=float), float(value),
                                     np.array(gradient, dtype=float)))

    @property
    def newest(self) -> BundlePiece:
        if not self.pieces:
            raise EmptyBundle
        return self.pieces[-1]

    def piece_values(self, x):
        """Value of every piece at ``x`` (no floor, no box)."""
        if not self.pieces:
            raise EmptyBundle
        x = np.asarray(x, dtype=float)
        out = np.empty(len(self.pieces))
        for i, p in enumerate(self.pieces):
            d = x - p.anchor
            out[i] = p.value + p.gradient @ d
            if self.rho > 0:
                out[i] += 0.5 * self.rho * (d @ d)
        return out

    def eval(self, x) -> float:
        vals = self.piece_values(x)
        x = np.asarray(x, dtype=float)
        if self.box is not None:
            lo, hi = self.box
            if np.any(x < lo) or np.any(x > hi):
                return math.inf
        val = float(np.max(vals))
        if self.floor is not None:
            val = max(val, self.floor)
        return val

    def epigraph_rows(self):
        """Rows ``(a_i, b_i)`` with ``z >= a_i^T x + b_i`` (+ ``rho/2 ||x||^2``).

        Returns ``(A, b)`` stacked; the floor, when set, adds a last row with
        ``a = 0``.  The shared quadratic term is ``self.rho`` and the box is
        ``self.box``; callers export both separately.
        """
        if not self.pieces:
            raise EmptyBundle
        A, b = [], []
        for p in self.pieces:
            A.append(p.gradient - self.rho * p.anchor)
            b.append(p.value - p.gradient @ p.anchor + 0.5 * self.rho * (p.anchor @ p.anchor))
        if self.floor is not None:
            A.append(np.zeros_like(A[0]))
            b.append(self.floor)
        return np.array(A), np.array(b)
