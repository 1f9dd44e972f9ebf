"""Dense primal-dual interior-point solver for convex quadratic programs.

Solves::

    minimize    1/2 x^T P x + c^T x
    subject to  A x = b,  C x <= d

with ``P = F F^T + diag(p_diag)``.  Mehrotra predictor-corrector steps on the
quasi-definite reduced KKT system, followed by an active-set polish that
sharpens primal and dual accuracy.
"""

from dataclasses import dataclass, field
import enum
import logging
from typing import Optional

import numpy as np

from .linalg import QuasiDefiniteFactor, SingularSystem

log = logging.getLogger(__name__)

UNBOUNDED_OBJ = -1e12
DIVERGED_NORM = 1e10
STATIC_REG = 1e-9
MAX_REG = 1e-4
STEP_FRACTION = 0.99


class NumericalBreakdown(RuntimeError):
    pass


class QpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"
    MAX_ITERS = "MaxIters"


def _mat(M, cols):
    if M is None:
        return np.zeros((0, cols))
    M = np.asarray(M, dtype=float)
    return M.reshape(-1, cols)


def _vec(v, size):
    if v is None:
        return np.zeros(size)
    return np.asarray(v, dtype=float).reshape(size)


@dataclass
class QpProblem:
    c: np.ndarray
    P_factor: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    p_diag: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        F = np.zeros((n, 0)) if self.P_factor is None else np.asarray(self.P_factor, dtype=float)
        self.P_factor = F.reshape(n, -1) if F.size else np.zeros((n, 0))
        self.A = _mat(self.A, n)
        self.b = _vec(self.b, self.A.shape[0])
        self.C = _mat(self.C, n)
        self.d = _vec(self.d, self.C.shape[0])
        self.p_diag = _vec(self.p_diag, n)
        for name in ("c", "P_factor", "A", "b", "C", "d", "p_diag"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"QP data {name} is not finite")
        if np.any(self.p_diag < 0):
            raise ValueError("p_diag must be nonnegative")

    @property
    def n(self):
        return self.c.size

    def P(self):
        F = self.P_factor
        return F @ F.T + np.diag(self.p_diag)

    def objective(self, x):
        Fx = self.P_factor.T @ x
        return 0.5 * (Fx @ Fx + self.p_diag @ (x * x)) + self.c @ x


@dataclass
class QpSolution:
    status: QpStatus
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    iters: int = 0
    primal_res: float = np.inf
    dual_res: float = np.inf
    gap: float = np.inf
    objective: float = np.nan
    polished: bool = False
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == QpStatus.OPTIMAL


def _residuals(qp, P, x, y, z, s):
    rd = P @ x + qp.c + qp.A.T @ y + qp.C.T @ z
    rpe = qp.A @ x - qp.b
    rpi = qp.C @ x + s - qp.d
    return rd, rpe, rpi


def _norm_inf(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _measures(qp, P, x, y, z, s):
    rd, rpe, rpi = _residuals(qp, P, x, y, z, s)
    pscale = 1.0 + max(_norm_inf(qp.b), _norm_inf(qp.d))
    pres = max(_norm_inf(rpe), _norm_inf(rpi)) / pscale
    dres = _norm_inf(rd) / (1.0 + _norm_inf(qp.c))
    obj = qp.objective(x)
    gap = float(s @ z) / (1.0 + abs(obj)) if s.size else 0.0
    return pres, dres, gap, obj


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _factor(K, n, reg):
    while True:
        try:
            return QuasiDefiniteFactor(K, reg, n_pos=n), reg
        except SingularSystem:
            reg *= 100.0
            if reg > MAX_REG:
                raise NumericalBreakdown("KKT factorization failed at maximum regularization")


def _solve_equality_qp(qp, P, tol):
    n, me = qp.n, qp.A.shape[0]
    K = np.block([[P, qp.A.T], [qp.A, np.zeros((me, me))]])
    rhs = np.concatenate([-qp.c, qp.b])
    u, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x, y = u[:n], u[n:]
    empty = np.zeros(0)
    pres, dres, gap, obj = _measures(qp, P, x, y, empty, empty)
    if pres <= tol and dres <= tol:
        return QpSolution(QpStatus.OPTIMAL, x, y, empty, empty, 0, pres, dres, 0.0, obj)
    # stationarity unsolvable: either the constraints are inconsistent or
    # there is a descent ray in the null space of P and A
    xa, *_ = np.linalg.lstsq(qp.A, qp.b, rcond=None) if me else (np.zeros(n),)
    if me and _norm_inf(qp.A @ xa - qp.b) > tol * (1 + _norm_inf(qp.b)):
        status = QpStatus.INFEASIBLE
    else:
        status = QpStatus.UNBOUNDED
    return QpSolution(status, x, y, empty, empty, 0, pres, dres, np.inf, -np.inf)


def _initial_point(qp, P, reg):
    n, me = qp.n, qp.A.shape[0]
    W = P + qp.C.T @ qp.C
    K = np.block([[W, qp.A.T], [qp.A, np.zeros((me, me))]])
    fac, _ = _factor(K, n, max(reg, 1e-8))
    u = fac.solve(np.concatenate([-qp.c + qp.C.T @ qp.d, qp.b]))
    x, y = u[:n], u[n:]
    s = qp.d - qp.C @ x
    z = -s.copy()
    for v in (s, z):
        worst = -np.min(v)
        if worst >= 0:
            v += 1.0 + worst
    return x, y, z, s


def _ipm(qp, tol, max_iters):
    n, me, mi = qp.n, qp.A.shape[0], qp.C.shape[0]
    P = qp.P()
    reg = STATIC_REG
    x, y, z, s = _initial_point(qp, P, reg)
    status = QpStatus.MAX_ITERS
    it = 0
    merit, progress, stalled = np.inf, np.inf, 0
    best = (x, y, z, s)
    for it in range(max_iters + 1):
        pres, dres, gap, obj = _measures(qp, P, x, y, z, s)
        current = max(pres, dres, gap)
        if current <= tol:
            # keep going while cheap progress remains: bundle subproblems
            # need accuracy relative to tiny model decreases
            if status == QpStatus.OPTIMAL and (current > 0.5 * merit or current <= 1e-15):
                break
            status = QpStatus.OPTIMAL
        elif status == QpStatus.OPTIMAL:
            break
        if current < merit:
            best = (x, y, z, s)
        merit = min(merit, current)
        # stall test on absolute quantities: the relative gap can grow while
        # |objective| shrinks even though the iterates are improving
        absolute = pres + dres + float(s @ z) / mi
        stalled = stalled + 1 if absolute > 0.9 * progress else 0
        progress = min(progress, absolute)
        if stalled >= 5:
            if status != QpStatus.OPTIMAL:
                status = "stalled"
            break
        if obj < UNBOUNDED_OBJ and pres <= 1e-6 or _norm_inf(x) > DIVERGED_NORM:
            status = "diverged"
            break
        if it == max_iters:
            break
        rd, rpe, rpi = _residuals(qp, P, x, y, z, s)
        mu = float(s @ z) / mi
        ratio = z / s
        W = P + qp.C.T @ (ratio[:, None] * qp.C)
        K = np.block([[W, qp.A.T], [qp.A, np.zeros((me, me))]])
        try:
            fac, reg = _factor(K, n, reg)
        except NumericalBreakdown:
            if status != QpStatus.OPTIMAL:
                status = "breakdown"
            break

        def direction(rc):
            rhs_x = -rd - qp.C.T @ (ratio * rpi - rc / s)
            rhs = np.concatenate([rhs_x, -rpe])
            u = fac.solve(rhs, refine=0)
            for _ in range(2):
                u = u + fac.solve(rhs - K @ u, refine=0)
            dx, dy = u[:n], u[n:]
            dz = ratio * (qp.C @ dx + rpi) - rc / s
            ds = -(rc + s * dz) / z
            return dx, dy, dz, ds

        rc = s * z
        dx, dy, dz, ds = direction(rc)
        a_aff = min(_max_step(s, ds), _max_step(z, dz))
        mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / mi
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        rc = s * z + ds * dz - sigma * mu
        dx, dy, dz, ds = direction(rc)
        alpha = min(1.0, STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
        x = x + alpha * dx
        y = y + alpha * dy
        z = np.maximum(z + alpha * dz, 1e-300)
        s = np.maximum(s + alpha * ds, 1e-300)
    if status == QpStatus.OPTIMAL:
        x, y, z, s = best
    pres, dres, gap, obj = _measures(qp, P, x, y, z, s)
    return status, QpSolution(QpStatus.MAX_ITERS, x, y, z, s, it, pres, dres, gap, obj), P


def _polish(qp, P, sol, tol):
    """Primal-dual active-set refinement started from the IPM's active guess.

    Each round solves the KKT system with the current active rows as
    equalities (least squares, since degenerate bundle subproblems often
    have dependent active rows), then releases the most negative dual or
    adds the most violated row.  Returns ``None`` unless it ends at a
    verified KKT point.
    """
    n, me, mi = qp.n, qp.A.shape[0], qp.C.shape[0]
    active = list(np.flatnonzero(sol.z > sol.s))
    ptol = tol * (1 + max(_norm_inf(qp.b), _norm_inf(qp.d)))
    dtol = 1e-12 * (1 + _norm_inf(sol.z))
    for _ in range(2 * mi + 10):
        M = np.vstack([qp.A, qp.C[active]])
        m = M.shape[0]
        K = np.block([[P, M.T], [M, np.zeros((m, m))]])
        rhs = np.concatenate([-qp.c, qp.b, qp.d[active]])
        u = np.linalg.lstsq(K, rhs, rcond=None)[0]
        u = u + np.linalg.lstsq(K, rhs - K @ u, rcond=None)[0]
        za = u[n + me:]
        s = qp.d - qp.C @ u[:n]
        if za.size and np.min(za) < -dtol:
            del active[int(np.argmin(za))]
            continue
        if np.min(s) < -ptol:
            active.append(int(np.argmin(s)))
            continue
        break
    else:
        return None
    x, y = u[:n], u[n:n + me]
    z = np.zeros(mi)
    z[active] = np.maximum(za, 0.0)
    s = np.maximum(s, 0.0)
    s[active] = 0.0
    pres, dres, gap, obj = _measures(qp, P, x, y, z, s)
    if pres > tol or dres > tol:
        return None
    return QpSolution(QpStatus.OPTIMAL, x, y, z, s, sol.iters, pres, dres, gap, obj, polished=True)


def recession_value(qp, tol=1e-9, max_iters=100):
    """``min c^T d`` over recession directions of the QP with ``||d||_inf <= 1``.

    A negative value certifies that the objective is unbounded below on any
    nonempty feasible set.
    """
    n = qp.n
    rows = [qp.A, qp.P_factor.T]
    pos = np.flatnonzero(qp.p_diag > 0)
    if pos.size:
        rows.append(np.eye(n)[pos])
    A = np.vstack(rows)
    C = np.vstack([qp.C, np.eye(n), -np.eye(n)])
    d = np.concatenate([np.zeros(qp.C.shape[0]), np.ones(2 * n)])
    aux = QpProblem(c=qp.c, A=A, b=np.zeros(A.shape[0]), C=C, d=d)
    status, sol, _ = _ipm(aux, tol, max_iters)
    if status != QpStatus.OPTIMAL and sol.primal_res > 1e-6:
        return 0.0
    return float(qp.c @ sol.x)


def solve(qp: QpProblem, tol=1e-9, max_iters=100, polish=True) -> QpSolution:
    mi = qp.C.shape[0]
    if mi == 0:
        return _solve_equality_qp(qp, qp.P(), tol)
    status, sol, P = _ipm(qp, tol, max_iters)
    if status == QpStatus.OPTIMAL:
        sol.status = QpStatus.OPTIMAL
        if polish:
            better = _polish(qp, P, sol, tol)
            if better is not None:
                return better
        return sol
    if max(sol.primal_res, sol.dual_res, sol.gap) <= 1e-6:
        # stalled close to the solution, typically from ill-conditioning
        better = _polish(qp, P, sol, tol)
        if better is not None and max(better.primal_res, better.dual_res, better.gap) <= tol:
            return better
    # not converged: look for a certificate before giving up
    rv = recession_value(qp)
    if rv < -1e-7 * (1 + _norm_inf(qp.c)):
        sol.status = QpStatus.UNBOUNDED
        sol.objective = -np.inf
        return sol
    if status == "breakdown" and sol.primal_res > 1e-6:
        raise NumericalBreakdown("KKT factorization failed")
    if sol.primal_res > 1e-6 and max(_norm_inf(sol.z), _norm_inf(sol.y)) > 1e8:
        sol.status = QpStatus.INFEASIBLE
    else:
        sol.status = QpStatus.MAX_ITERS
    log.debug("QP stopped with %s after %d iterations (pres=%.2e dres=%.2e gap=%.2e)",
              sol.status.value, sol.iters, sol.primal_res, sol.dual_res, sol.gap)
    return sol
