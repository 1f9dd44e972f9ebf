"""Oracle-structured minimization: the outer loop and its building blocks."""

from dataclasses import dataclass, field, asdict
import enum
import logging
import math
import time
from typing import Callable, Optional

import numpy as np

from . import qp as qpsolver
from .bundle import Bundle
from .curvature import CurvatureModel
from .oracle import Oracle
from .structured import StructuredFunction, canonicalize

log = logging.getLogger(__name__)

NEAR_OPTIMAL = 1e-6


class SubproblemFailed(RuntimeError):
    pass


class LineSearchStalled(RuntimeError):
    pass


class InfeasibleStart(ValueError):
    pass


class DualSumMismatch(ValueError):
    pass


class Status(str, enum.Enum):
    GAP = "GapConverged"
    RESIDUAL = "ResidualConverged"
    MAX_ITERS = "MaxIters"
    STALLED = "LineSearchStalled"


@dataclass
class SolverConfig:
    memory: int = 20
    rank: int = 20
    alpha: float = 0.05
    beta: float = 0.5
    tau_min: float = 1e-3
    gamma_dec: float = 0.8
    gamma_inc: float = 1.1
    mu_min: float = 1e-4
    mu_max: float = 1e5
    mu0: float = 1.0
    eps_gap_abs: float = 1e-4
    eps_gap_rel: float = 1e-3
    eps_res_abs: float = 1e-4
    eps_res_rel: float = 1e-3
    max_iters: int = 200
    bound_every: int = 10
    max_halvings: int = 60
    rho: float = 0.0
    box: Optional[tuple] = None
    floor: Optional[float] = None
    use_validation: bool = False
    qp_tol: float = 1e-9

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("line search parameters must lie in (0, 1)")
        if not (0 < self.gamma_dec < 1 < self.gamma_inc):
            raise ValueError("need 0 < gamma_dec < 1 < gamma_inc")
        if not (0 < self.mu_min <= self.mu0 <= self.mu_max):
            raise ValueError("need 0 < mu_min <= mu0 <= mu_max")
        if self.memory < 1 or self.rank < 0 or self.max_iters < 0 or self.bound_every < 1:
            raise ValueError("invalid memory, rank, max_iters or bound cadence")
        if self.tau_min <= 0:
            raise ValueError("tau_min must be positive")


@dataclass
class IterRecord:
    k: int
    f: float
    g: float
    h: float
    lower_bound: float
    gap: float
    rms_residual: float
    t: float
    lam: float
    mu: float
    r1: int
    f_evals: int
    time_s: float
    quad: float = math.nan
    phi: float = math.nan


@dataclass
class SolveReport:
    status: Status
    x: np.ndarray
    h: float
    lower_bound: float
    records: list = field(default_factory=list)
    f_value_calls: int = 0
    f_grad_calls: int = 0
    wall_time_s: float = 0.0

    @property
    def iters(self):
        return max(len(self.records) - 1, 0)

    @property
    def gap(self):
        return self.h - self.lower_bound

    def summary(self):
        return {
            "status": self.status.value,
            "h_final": self.h,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "iters": self.iters,
            "f_value_calls": self.f_value_calls,
            "f_grad_calls": self.f_grad_calls,
            "wall_time_s": self.wall_time_s,
        }


@dataclass
class TentativeStep:
    x_half: np.ndarray
    gamma: np.ndarray
    z_half: float
    box_dual: Optional[np.ndarray]
    active: np.ndarray
    qp: qpsolver.QpSolution


@dataclass
class _Subproblem:
    qp: qpsolver.QpProblem
    epi: slice
    n_box: int
    x_ref: np.ndarray
    z_ref: float
    offset: float


def _assemble(pieces, bundle: Bundle, x_ref, quad_factor=None, quad_diag=0.0) -> _Subproblem:
    """QP for ``l_k + g`` (plus an optional proximal model) in shifted variables.

    Variables are ``(w - w_ref, z - z_ref)`` with ``w_ref`` the lift of
    ``x_ref`` and ``z_ref`` the newest bundle value, so the QP data and its
    tolerances scale with the step rather than with ``|x|`` or ``|f|``.  The
    proximal term is centered at ``x_ref``; ``offset`` restores the
    objective of ``l_k + g`` in original variables.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    n = x_ref.size
    nv = pieces.n_var
    N = nv + 1
    w_ref = pieces.lift(x_ref)
    z_ref = float(bundle.newest.value)
    Fw = pieces.factor.T @ w_ref
    linear = np.append(pieces.linear + pieces.factor @ Fw, 1.0)
    linear[:n] += bundle.rho * x_ref
    offset = (0.5 * float(Fw @ Fw) + float(pieces.linear @ w_ref) + z_ref
              + 0.5 * bundle.rho * float(x_ref @ x_ref))
    factors = [np.vstack([pieces.factor, np.zeros((1, pieces.factor.shape[1]))])]
    if quad_factor is not None and quad_factor.shape[1]:
        factors.append(np.vstack([quad_factor, np.zeros((N - n, quad_factor.shape[1]))]))
    p_diag = np.zeros(N)
    p_diag[:n] += bundle.rho + quad_diag
    A = np.hstack([pieces.A, np.zeros((pieces.A.shape[0], 1))])
    b = pieces.b - pieces.A @ w_ref
    rows, rhs = bundle.epigraph_rows()
    epi = np.zeros((rows.shape[0], N))
    epi[:, :n] = rows
    epi[:, -1] = -1.0
    C_blocks = [np.hstack([pieces.C, np.zeros((pieces.C.shape[0], 1))]), epi]
    d_blocks = [pieces.d - pieces.C @ w_ref, z_ref - (rows @ x_ref + rhs)]
    n_box = 0
    if bundle.box is not None:
        lo, hi = bundle.box
        eye = np.eye(N)[:n]
        C_blocks += [-eye, eye]
        d_blocks += [x_ref - lo, hi - x_ref]
        n_box = n
    problem = qpsolver.QpProblem(c=linear, P_factor=np.hstack(factors), A=A, b=b,
                                 C=np.vstack(C_blocks), d=np.concatenate(d_blocks), p_diag=p_diag)
    epi_start = pieces.C.shape[0]
    return _Subproblem(problem, slice(epi_start, epi_start + rows.shape[0]), n_box,
                       x_ref, z_ref, offset)


def tentative_step(bundle: Bundle, curvature: CurvatureModel, g: StructuredFunction, x_k, lam,
                   pieces=None, qp_tol=1e-9) -> TentativeStep:
    """Minimize ``l_k(x) + g(x) + 1/2 (x - x_k)^T (H + lam I)(x - x_k)``."""
    if lam <= 0:
        raise ValueError("trust parameter must be positive")
    x_k = np.asarray(x_k, dtype=float)
    n = x_k.size
    pieces = pieces or canonicalize(g)
    sub = _assemble(pieces, bundle, x_k, curvature.G, lam)
    sol = qpsolver.solve(sub.qp, tol=qp_tol)
    if not sol.optimal:
        raise SubproblemFailed(f"tentative step QP returned {sol.status.value}")
    dx = sol.x[:n]
    x_half = x_k + dx
    z_half = sub.z_ref + float(sol.x[-1])
    gamma = sol.z[sub.epi].copy()
    box_dual = None
    if sub.n_box:
        zb = sol.z[sub.epi.stop:sub.epi.stop + 2 * sub.n_box]
        box_dual = zb[sub.n_box:] - zb[:sub.n_box]
    # slack of each piece at the tentative point, in the shifted frame
    slack = sub.qp.d[sub.epi] - (sub.qp.C[sub.epi] @ sol.x)
    active = slack <= 1e-7 * (1.0 + abs(z_half))
    return TentativeStep(x_half, gamma, z_half, box_dual, active, sol)


def recover_subgradient(gamma, bundle: Bundle, curvature: CurvatureModel, lam, v,
                        x_half=None, box_dual=None):
    """Subgradient ``q`` of ``g`` at the tentative point from the epigraph duals.

    ``q = -sum_i gamma_i grad_i - (H + lam I) v``; with a strongly convex
    minorant each ``grad_i`` is the gradient of its quadratic piece at
    ``x_half``, and box-minorant duals are attributed to ``l_k``.
    """
    gamma = np.asarray(gamma, dtype=float)
    total = float(np.sum(gamma))
    if abs(total - 1.0) > 1e-6:
        raise DualSumMismatch(f"dual weights sum to {total}")
    if np.any(gamma < -1e-10):
        raise DualSumMismatch("negative dual weight")
    v = np.asarray(v, dtype=float)
    lk_sub = np.zeros_like(v)
    for gi, p in zip(gamma, bundle.pieces):
        grad = p.gradient
        if bundle.rho > 0 and x_half is not None:
            grad = grad + bundle.rho * (x_half - p.anchor)
        lk_sub += gi * grad
    if box_dual is not None:
        lk_sub += box_dual
    return -lk_sub - curvature.matvec(v) - lam * v


def line_search(oracle: Oracle, g, x_k, x_half, g_xk, g_xhalf, quad, h_k=None, f_k=None,
                alpha=0.05, beta=0.5, max_halvings=60):
    """Backtracking on the chord bound ``phi(t) = f(x_k + t v) + t g_half + (1 - t) g_k``.

    Returns ``(t, f_new, evals, phi)``; raises :class:`LineSearchStalled`.
    """
    x_k = np.asarray(x_k, dtype=float)
    v = np.asarray(x_half, dtype=float) - x_k
    if h_k is None:
        f0 = oracle.value(x_k) if f_k is None else f_k
        h_k = f0 + g_xk
    t = 1.0
    evals = 0
    for j in range(max_halvings + 1):
        f_t = oracle.value(x_k + t * v)
        evals += 1
        phi = f_t + t * g_xhalf + (1.0 - t) * g_xk
        if math.isfinite(f_t) and phi <= h_k - 0.5 * alpha * t * quad:
            return t, f_t, evals, phi
        t *= beta
    raise LineSearchStalled(f"no acceptable step after {max_halvings} halvings")


def trust_update(mu, t, tau_next, gamma_dec=0.8, gamma_inc=1.1, mu_min=1e-4, mu_max=1e5,
                 tau_min=1e-3):
    if t == 1.0:
        mu = max(gamma_dec * mu, mu_min)
    else:
        mu = min(gamma_inc * mu, mu_max)
    return mu, mu * (tau_next + tau_min)


def lower_bound(bundle: Bundle, g: StructuredFunction, pieces=None, qp_tol=1e-9) -> float:
    """``inf_x l_k(x) + g(x)``; ``-inf`` when unbounded below."""
    if len(bundle) == 0:
        raise ValueError("empty bundle")
    pieces = pieces or canonicalize(g)
    sub = _assemble(pieces, bundle, bundle.newest.anchor)
    sol = qpsolver.solve(sub.qp, tol=qp_tol)
    if sol.status == qpsolver.QpStatus.UNBOUNDED:
        return -math.inf
    if sol.status == qpsolver.QpStatus.INFEASIBLE:
        raise SubproblemFailed("lower-bound problem is infeasible; inconsistent g atoms")
    if sol.optimal:
        return sub.offset + float(sol.objective)
    if max(sol.primal_res, sol.dual_res, sol.gap) <= NEAR_OPTIMAL:
        # stalled close to the optimum (typical for degenerate LPs); back off
        # by the complementarity so the value stays on the safe side
        log.debug("lower-bound QP stalled near optimum (%s)", sol.status.value)
        return sub.offset + float(sol.objective) - float(sol.s @ sol.z)
    log.warning("lower-bound QP ended with %s; bound skipped", sol.status.value)
    return -math.inf


def _rms(v):
    return float(np.linalg.norm(v)) / math.sqrt(v.size)


def solve(oracle: Oracle, g: StructuredFunction, x0, config: Optional[SolverConfig] = None,
          callback: Optional[Callable] = None) -> SolveReport:
    """Run the method from ``x0``.

    ``callback``, when given, receives a dict per completed step with the
    tentative point, duals, recovered subgradient and line-search data.
    """
    cfg = config or SolverConfig()
    t_start = time.perf_counter()
    oracle.reset_counters()
    x = np.array(x0, dtype=float)
    n = x.size
    ev = oracle.evaluate(x)
    if not ev.finite:
        raise InfeasibleStart("f(x0) is infinite")
    g_x = g.eval(x)
    if not math.isfinite(g_x):
        raise InfeasibleStart("g(x0) is infinite")
    f_x, grad = ev.value, ev.gradient
    h_x = f_x + g_x
    pieces = canonicalize(g)
    bundle = Bundle(cfg.memory, cfg.rho, cfg.box, cfg.floor)
    curv = CurvatureModel(n, cfg.rank)
    mu = cfg.mu0
    lam = mu * (curv.tau() + cfg.tau_min)
    L = -math.inf
    records = []
    status = Status.MAX_ITERS
    calls_before = oracle.value_calls

    def bound_check(k, final=False):
        nonlocal L
        if final or k % cfg.bound_every == 0:
            L = max(L, lower_bound(bundle, g, pieces, cfg.qp_tol))
            eps_abs = cfg.eps_gap_abs
            if cfg.use_validation and oracle.validation is not None:
                eps_abs = max(eps_abs, abs(oracle.validation.value(x) - f_x))
            return h_x - L <= eps_abs + cfg.eps_gap_rel * abs(h_x)
        return False

    def record(k, rms=math.nan, t=math.nan, quad=math.nan, phi=math.nan):
        nonlocal calls_before
        rec = IterRecord(k, f_x, g_x, h_x, L, h_x - L, rms, t, lam, mu, curv.r1,
                         oracle.value_calls - calls_before, time.perf_counter() - t_start,
                         quad, phi)
        calls_before = oracle.value_calls
        records.append(rec)
        return rec

    k = 0
    while True:
        bundle.add(x, f_x, grad)
        if bound_check(k, final=(k == cfg.max_iters)):
            status = Status.GAP
            record(k)
            break
        if k == cfg.max_iters:
            status = Status.MAX_ITERS
            record(k)
            break
        step = tentative_step(bundle, curv, g, x, lam, pieces, cfg.qp_tol)
        v = step.x_half - x
        if not np.any(np.abs(v) > 1e-14 * (1.0 + np.max(np.abs(x)))):
            # fixed point of the tentative update: x is optimal
            q = recover_subgradient(step.gamma, bundle, curv, lam, v, step.x_half, step.box_dual)
            bound_check(k, final=True)
            status = Status.RESIDUAL
            record(k, rms=_rms(grad + q), t=1.0, quad=0.0)
            break
        g_half = g.eval(step.x_half)
        if not math.isfinite(g_half):
            raise SubproblemFailed("tentative point violates the constraints of g")
        Hv = curv.matvec(v)
        quad = float(v @ Hv + lam * (v @ v))
        try:
            t, f_new, _, phi = line_search(oracle, g, x, step.x_half, g_x, g_half, quad,
                                           h_k=h_x, alpha=cfg.alpha, beta=cfg.beta,
                                           max_halvings=cfg.max_halvings)
        except LineSearchStalled:
            status = Status.GAP if bound_check(k, final=True) else Status.STALLED
            record(k)
            break
        x_new = x + t * v if t < 1.0 else step.x_half.copy()
        g_new = g_half if t == 1.0 else g.eval(x_new)
        h_new = f_new + g_new
        if not h_new < h_x:
            log.info("step did not decrease h in floating point; stopping")
            status = Status.GAP if bound_check(k, final=True) else Status.STALLED
            record(k)
            break
        ev_new = oracle.evaluate(x_new)
        q = None
        rms = math.nan
        converged = False
        if t == 1.0:
            q = recover_subgradient(step.gamma, bundle, curv, lam, v, step.x_half, step.box_dual)
            res = ev_new.gradient + q
            rms = _rms(res)
            converged = rms <= cfg.eps_res_abs + cfg.eps_res_rel * (_rms(ev_new.gradient) + _rms(q))
        if callback is not None:
            callback({
                "k": k, "x": x.copy(), "x_half": step.x_half, "x_next": x_new, "v": v,
                "t": t, "quad": quad, "phi": phi, "h": h_x, "h_next": h_new,
                "grad": grad.copy(), "g_x": g_x, "g_half": g_half, "gamma": step.gamma,
                "active": step.active, "q": q, "lam": lam, "bundle_size": len(bundle),
                "tau": curv.tau(),
            })
        record(k, rms=rms, t=t, quad=quad, phi=phi)
        curv.update(x_new - x, ev_new.gradient - grad)
        mu, lam = trust_update(mu, t, curv.tau(), cfg.gamma_dec, cfg.gamma_inc,
                               cfg.mu_min, cfg.mu_max, cfg.tau_min)
        x, f_x, grad, g_x, h_x = x_new, ev_new.value, ev_new.gradient, g_new, h_new
        k += 1
        if converged:
            bundle.add(x, f_x, grad)
            bound_check(k, final=True)
            status = Status.RESIDUAL
            record(k)
            break

    return SolveReport(status, x, h_x, L, records, oracle.value_calls, oracle.grad_calls,
                       time.perf_counter() - t_start)


def records_as_rows(records):
    return [asdict(r) for r in records]
