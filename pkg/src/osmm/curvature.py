"""Low-rank quasi-Newton curvature model ``H = G G^T`` with Fletcher's update."""

import numpy as np

from .linalg import orth_complement, rq_upper


class DimensionMismatch(ValueError):
    pass


class CurvatureModel:
    """Factor ``G`` (n x r) whose first ``r1`` columns carry secant information.

    ``r1`` is kept across updates: the next update tries ``r1 + 1`` leading
    columns first, so the secant block can grow by one column per step into
    the (initially zero) trailing block.
    """

    def __init__(self, n, rank=20, eps_abs=1e-8, eps_rel=1e-3):
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        self.n = int(n)
        self.rank = int(rank)
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.G = np.zeros((self.n, self.rank))
        self.r1 = 0
        self.last_path = None

    def copy(self):
        other = CurvatureModel(self.n, self.rank, self.eps_abs, self.eps_rel)
        other.G = self.G.copy()
        other.r1 = self.r1
        return other

    @property
    def H(self):
        return self.G @ self.G.T

    def tau(self):
        return float(np.sum(self.G * self.G)) / self.n

    def apply_factor(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected shape ({self.n},), got {x.shape}")
        return self.G.T @ x

    def matvec(self, v):
        """``H v`` through the factor."""
        return self.G @ self.apply_factor(v)

    def _select_r1(self, s, y, sy, ns):
        for r1 in range(min(self.rank, self.r1 + 1), 0, -1):
            G1 = self.G[:, :r1]
            w1 = G1.T @ s
            lhs = sy - w1 @ w1
            if lhs > self.eps_rel * ns * np.linalg.norm(y - G1 @ w1):
                return r1
        return 0

    @staticmethod
    def _shrink(G2, w2):
        """``G2 Q2`` with ``Q2`` an orthonormal basis of ``w2``'s complement."""
        if G2.shape[1] <= 1:
            return G2[:, :0]
        if not np.any(w2):
            # every column is already orthogonal to s; drop the weakest one
            drop = int(np.argmin(np.sum(G2 * G2, axis=0)))
            return np.delete(G2, drop, axis=1)
        return G2 @ orth_complement(w2)

    def update(self, s, y):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        if s.shape != (self.n,) or y.shape != (self.n,):
            raise DimensionMismatch("s and y must have shape (n,)")
        r = self.rank
        if r == 0:
            self.last_path = "none"
            return self
        sy = float(s @ y)
        ns, ny = np.linalg.norm(s), np.linalg.norm(y)
        if sy > max(self.eps_abs, self.eps_rel * ns * ny):
            r1 = self._select_r1(s, y, sy, ns)
            G1, G2 = self.G[:, :r1], self.G[:, r1:]
            w1 = G1.T @ s
            c = np.sqrt(sy - w1 @ w1)
            if r1 == 0:
                G1_new = (y / np.sqrt(sy))[:, None]
            else:
                B = np.eye(r1 + 1)
                B[0, 0] = 1.0 / c
                B[1:, 0] = -w1 / c
                R, _ = rq_upper(B)
                G1_new = np.column_stack([y, G1]) @ R
            G2_new = self._shrink(G2, G2.T @ s)
            G_new = np.column_stack([G1_new, G2_new])[:, :r]
            self.G = G_new
            self.r1 = min(r1 + 1, r)
            self.last_path = "truncated" if r1 == r else "secant"
            return self
        w2 = self.G.T @ s
        if np.linalg.norm(w2) > self.eps_abs:
            # no usable curvature pair: only remove the s-direction from H
            self.G = np.column_stack([self._shrink(self.G, w2), np.zeros(self.n)])
            self.r1 = 0
            self.last_path = "project"
        else:
            self.last_path = "skip"
        return self
