"""Dense kernels used by the curvature update and the interior-point solver."""

import numpy as np
import scipy.linalg as sla


class SingularSystem(ValueError):
    pass


class ZeroVector(ValueError):
    pass


PIVOT_TOL = 1e-14


def _chol(M):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("pivot below tolerance") from exc
    if M.shape[0] and np.min(np.abs(np.diag(L))) ** 2 < PIVOT_TOL:
        raise SingularSystem("pivot below tolerance")
    return L


def _tri_solve(L, b):
    y = sla.solve_triangular(L, b, lower=True, check_finite=False)
    return sla.solve_triangular(L.T, y, lower=False, check_finite=False)


class QuasiDefiniteFactor:
    """Factorization of ``[[K11 + reg I, K12], [K21, K22 - reg I]]``.

    The (1,1) block must be positive definite after regularization and the
    Schur complement ``K21 K11^{-1} K12 - K22 + reg I`` positive definite too,
    which holds for every quasi-definite matrix.  No pivoting is performed, so
    this is an LDL^T with a two-block diagonal sign pattern.
    """

    def __init__(self, K, reg=0.0, n_pos=None):
        K = np.asarray(K, dtype=float)
        n = K.shape[0]
        if K.shape != (n, n):
            raise ValueError("K must be square")
        self.n = n
        self.n_pos = n if n_pos is None else int(n_pos)
        self.reg = float(reg)
        p = self.n_pos
        self.K = K
        K11 = K[:p, :p] + self.reg * np.eye(p)
        self.L1 = _chol(K11)
        self.K12 = K[:p, p:]
        if p < n:
            X = _tri_solve(self.L1, self.K12)
            S = self.K12.T @ X - K[p:, p:] + self.reg * np.eye(n - p)
            self.L2 = _chol(0.5 * (S + S.T))
        else:
            self.L2 = None

    def matvec(self, u):
        """Product with the regularized matrix."""
        out = self.K @ u
        p = self.n_pos
        out[:p] += self.reg * u[:p]
        out[p:] -= self.reg * u[p:]
        return out

    def _solve_once(self, rhs):
        p = self.n_pos
        r1, r2 = rhs[:p], rhs[p:]
        u1 = _tri_solve(self.L1, r1)
        if self.L2 is None:
            return u1
        u2 = _tri_solve(self.L2, self.K12.T @ u1 - r2)
        u1 = _tri_solve(self.L1, r1 - self.K12 @ u2)
        return np.concatenate([u1, u2])

    def solve(self, rhs, refine=1):
        rhs = np.asarray(rhs, dtype=float)
        u = self._solve_once(rhs)
        for _ in range(refine):
            u = u + self._solve_once(rhs - self.matvec(u))
        return u


def ldl_solve(K, rhs, reg=0.0, n_pos=None):
    """Solve the (regularized) symmetric quasi-definite system ``K u = rhs``.

    ``reg`` is added on the first ``n_pos`` diagonal entries and subtracted on
    the rest.  With the default ``n_pos`` the whole matrix is treated as the
    positive block.
    """
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    return QuasiDefiniteFactor(K, reg, n_pos).solve(rhs, refine=1)


def rq_upper(B):
    """RQ factorization ``B = R @ Q`` with ``R`` upper triangular, ``diag(R) >= 0``."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n):
        raise ValueError("B must be square")
    if n == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    # QR of the flipped transpose: (P B)^T = Qt Rt  =>  B = (P Rt^T P)(P Qt^T)
    Qt, Rt = np.linalg.qr(B[::-1, :].T)
    R = Rt.T[::-1, ::-1].copy()
    Q = Qt.T[::-1, :].copy()
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    R *= signs[np.newaxis, :]
    Q *= signs[:, np.newaxis]
    return R, Q


def householder(w):
    """Reflector ``I - 2 u u^T`` mapping ``w`` onto ``||w|| e_1``."""
    w = np.asarray(w, dtype=float)
    nw = np.linalg.norm(w)
    if nw == 0:
        raise ZeroVector("cannot reflect the zero vector")
    u = w.copy()
    # pick the sign that avoids cancellation, then fix orientation afterwards
    alpha = -nw if w[0] > 0 else nw
    u[0] -= alpha
    nu = np.linalg.norm(u)
    H = np.eye(w.size)
    if nu > 0:
        u /= nu
        H -= 2.0 * np.outer(u, u)
    return H


def orth_complement(w):
    """Orthonormal basis (as columns) of the complement of ``span{w}``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("w must be a nonempty vector")
    return householder(w)[:, 1:]
