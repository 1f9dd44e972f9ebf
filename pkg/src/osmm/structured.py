"""The structured part ``g`` as a fixed set of atoms, and its QP lowering."""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np

from . import qp as qpsolver


class InfeasibleBase(ValueError):
    pass


@dataclass
class HingeBudget:
    """``phi(x) = a^T x_S + kappa a^T (x_S - knot)_+ <= cap`` with ``a, kappa >= 0``.

    ``weight * phi(x)`` is also added to the cost of ``g`` (default 0).
    """
    index: np.ndarray
    a: np.ndarray
    knot: np.ndarray
    cap: float
    kappa: float = 0.5
    weight: float = 0.0

    def __post_init__(self):
        self.index = np.asarray(self.index, dtype=int)
        self.a = np.asarray(self.a, dtype=float)
        self.knot = np.asarray(self.knot, dtype=float)
        if np.any(self.a < 0) or self.kappa < 0 or self.weight < 0:
            raise ValueError("hinge budget needs nonnegative weights")

    def value(self, x):
        xs = x[self.index]
        return float(self.a @ xs + self.kappa * self.a @ np.maximum(xs - self.knot, 0.0))


@dataclass
class StructuredFunction:
    """``g(x) = c^T x + 1/2 ||F^T x||^2`` plus indicators of the constraint atoms.

    Constraint atoms: ``lower <= x <= upper``; ``x[nonneg] >= 0``;
    ``x[simplex] >= 0, sum(x[simplex]) = 1``; ``A_eq x = b_eq``;
    ``C_ineq x <= d_ineq``; ``||x[l1_index]||_1 <= l1_radius``; and
    an optional :class:`HingeBudget`.
    """
    n: int
    c: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    nonneg: Optional[np.ndarray] = None
    simplex: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    C_ineq: Optional[np.ndarray] = None
    d_ineq: Optional[np.ndarray] = None
    l1_index: Optional[np.ndarray] = None
    l1_radius: Optional[float] = None
    hinge: Optional[HingeBudget] = None

    def __post_init__(self):
        n = self.n
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float).reshape(n)
        if self.F is not None:
            self.F = np.asarray(self.F, dtype=float).reshape(n, -1)
        if self.lower is not None:
            self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        if self.upper is not None:
            self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if self.nonneg is not None:
            self.nonneg = np.asarray(self.nonneg, dtype=int).ravel()
        if self.simplex is not None:
            self.simplex = np.asarray(self.simplex, dtype=int).ravel()
        if self.A_eq is not None:
            self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
            self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.C_ineq is not None:
            self.C_ineq = np.asarray(self.C_ineq, dtype=float).reshape(-1, n)
            self.d_ineq = np.asarray(self.d_ineq, dtype=float).reshape(-1)
        if self.l1_index is not None:
            self.l1_index = np.asarray(self.l1_index, dtype=int).ravel()
            if self.l1_radius is None or self.l1_radius < 0:
                raise ValueError("l1 ball needs a nonnegative radius")

    def cost(self, x) -> float:
        val = 0.0
        if self.c is not None:
            val += float(self.c @ x)
        if self.F is not None:
            Fx = self.F.T @ x
            val += 0.5 * float(Fx @ Fx)
        if self.hinge is not None and self.hinge.weight:
            val += self.hinge.weight * self.hinge.value(x)
        return val

    def violation(self, x) -> float:
        """Largest constraint violation, each scaled by ``1 + |rhs|``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0

        def upd(excess, rhs):
            nonlocal worst
            if np.size(excess):
                worst = max(worst, float(np.max(excess / (1.0 + np.abs(rhs)))))

        if self.lower is not None:
            fin = np.isfinite(self.lower)
            upd(self.lower[fin] - x[fin], self.lower[fin])
        if self.upper is not None:
            fin = np.isfinite(self.upper)
            upd(x[fin] - self.upper[fin], self.upper[fin])
        if self.nonneg is not None:
            upd(-x[self.nonneg], 0.0)
        if self.simplex is not None:
            upd(-x[self.simplex], 0.0)
            upd(np.abs(np.sum(x[self.simplex]) - 1.0), 1.0)
        if self.A_eq is not None:
            upd(np.abs(self.A_eq @ x - self.b_eq), self.b_eq)
        if self.C_ineq is not None:
            upd(self.C_ineq @ x - self.d_ineq, self.d_ineq)
        if self.l1_index is not None:
            upd(np.sum(np.abs(x[self.l1_index])) - self.l1_radius, self.l1_radius)
        if self.hinge is not None:
            upd(self.hinge.value(x) - self.hinge.cap, self.hinge.cap)
        return worst

    def eval(self, x, feas_tol=1e-8) -> float:
        x = np.asarray(x, dtype=float)
        if self.violation(x) > feas_tol:
            return math.inf
        return self.cost(x)

    def __call__(self, x):
        return self.eval(x)


def eval_g(g: StructuredFunction, x, feas_tol=1e-8) -> float:
    return g.eval(x, feas_tol)


@dataclass
class CanonicalQPPieces:
    """``g`` lowered to QP data over lifted variables ``(x, extra)``.

    Objective ``1/2 ||factor^T u||^2 + linear^T u``; constraints
    ``A u = b`` and ``C u <= d``.  The epigraph scalar of the bundle is not
    part of these pieces; the subproblem assembler appends it as the last
    variable.
    """
    n: int
    n_var: int
    factor: np.ndarray
    linear: np.ndarray
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray
    lifts: dict = field(default_factory=dict)

    def restrict(self, u):
        return np.asarray(u)[: self.n]

    def lift(self, x):
        """A lifted point consistent with ``x`` (feasible whenever ``x`` is)."""
        x = np.asarray(x, dtype=float)
        parts = [x]
        for kind, (idx, _start, _width, data) in self.lifts.items():
            xs = x[idx]
            if kind == "l1_split":
                parts += [np.maximum(xs, 0.0), np.maximum(-xs, 0.0)]
            elif kind == "l1_abs":
                parts.append(np.abs(xs))
            elif kind == "hinge":
                parts.append(np.maximum(xs - data, 0.0))
        return np.concatenate(parts)


def canonicalize(g: StructuredFunction, include_l1_split=True) -> CanonicalQPPieces:
    """Lower the atoms of ``g`` into one equality and one inequality block.

    The l1 ball becomes ``x_S = u - v, u, v >= 0, sum(u + v) <= L`` with
    ``include_l1_split``, otherwise ``-t <= x_S <= t, sum(t) <= L``.  The hinge
    budget uses epigraph variables ``e >= 0, e >= x_S - knot``.
    """
    n = g.n
    lifts = {}
    width = n
    if g.l1_index is not None:
        k = g.l1_index.size
        if include_l1_split:
            lifts["l1_split"] = (g.l1_index, width, 2 * k, None)
            width += 2 * k
        else:
            lifts["l1_abs"] = (g.l1_index, width, k, None)
            width += k
    if g.hinge is not None:
        k = g.hinge.index.size
        lifts["hinge"] = (g.hinge.index, width, k, g.hinge.knot)
        width += k

    eq_rows, eq_rhs, in_rows, in_rhs = [], [], [], []

    def row(entries):
        r = np.zeros(width)
        for idx, val in entries:
            r[idx] += val
        return r

    eye = np.eye(width)
    if g.lower is not None:
        for i in np.flatnonzero(np.isfinite(g.lower)):
            in_rows.append(-eye[i])
            in_rhs.append(-g.lower[i])
    if g.upper is not None:
        for i in np.flatnonzero(np.isfinite(g.upper)):
            in_rows.append(eye[i])
            in_rhs.append(g.upper[i])
    if g.nonneg is not None:
        for i in g.nonneg:
            in_rows.append(-eye[i])
            in_rhs.append(0.0)
    if g.simplex is not None:
        eq_rows.append(row([(g.simplex, 1.0)]))
        eq_rhs.append(1.0)
        for i in g.simplex:
            in_rows.append(-eye[i])
            in_rhs.append(0.0)
    if g.A_eq is not None:
        for a, bb in zip(g.A_eq, g.b_eq):
            eq_rows.append(np.concatenate([a, np.zeros(width - n)]))
            eq_rhs.append(bb)
    if g.C_ineq is not None:
        for a, dd in zip(g.C_ineq, g.d_ineq):
            in_rows.append(np.concatenate([a, np.zeros(width - n)]))
            in_rhs.append(dd)
    if "l1_split" in lifts:
        idx, start, w, _ = lifts["l1_split"]
        k = idx.size
        for j, i in enumerate(idx):
            eq_rows.append(row([(i, 1.0), (start + j, -1.0), (start + k + j, 1.0)]))
            eq_rhs.append(0.0)
        for j in range(w):
            in_rows.append(-eye[start + j])
            in_rhs.append(0.0)
        in_rows.append(row([(np.arange(start, start + w), 1.0)]))
        in_rhs.append(g.l1_radius)
    if "l1_abs" in lifts:
        idx, start, w, _ = lifts["l1_abs"]
        for j, i in enumerate(idx):
            in_rows.append(row([(i, 1.0), (start + j, -1.0)]))
            in_rhs.append(0.0)
            in_rows.append(row([(i, -1.0), (start + j, -1.0)]))
            in_rhs.append(0.0)
        in_rows.append(row([(np.arange(start, start + w), 1.0)]))
        in_rhs.append(g.l1_radius)
    if "hinge" in lifts:
        idx, start, w, knot = lifts["hinge"]
        h = g.hinge
        for j, i in enumerate(idx):
            in_rows.append(-eye[start + j])
            in_rhs.append(0.0)
            in_rows.append(row([(i, 1.0), (start + j, -1.0)]))
            in_rhs.append(knot[j])
        r = np.zeros(width)
        r[idx] += h.a
        r[start:start + w] += h.kappa * h.a
        in_rows.append(r)
        in_rhs.append(h.cap)

    factor = np.zeros((width, 0))
    if g.F is not None:
        factor = np.vstack([g.F, np.zeros((width - n, g.F.shape[1]))])
    linear = np.zeros(width)
    if g.c is not None:
        linear[:n] = g.c
    if "hinge" in lifts and g.hinge.weight:
        idx, start, w, _ = lifts["hinge"]
        linear[idx] += g.hinge.weight * g.hinge.a
        linear[start:start + w] += g.hinge.weight * g.hinge.kappa * g.hinge.a
    return CanonicalQPPieces(
        n=n, n_var=width, factor=factor, linear=linear,
        A=np.array(eq_rows).reshape(-1, width), b=np.array(eq_rhs, dtype=float),
        C=np.array(in_rows).reshape(-1, width), d=np.array(in_rhs, dtype=float),
        lifts=lifts,
    )


def lifted_feasible(pieces: CanonicalQPPieces, x, tol=1e-8) -> bool:
    """Whether ``x`` admits a feasible lift in the canonical blocks."""
    u = pieces.lift(x)
    ok = True
    if pieces.A.size:
        ok &= bool(np.all(np.abs(pieces.A @ u - pieces.b) <= tol * (1 + np.abs(pieces.b))))
    if pieces.C.size:
        ok &= bool(np.all(pieces.C @ u - pieces.d <= tol * (1 + np.abs(pieces.d))))
    return ok


def project(g: StructuredFunction, p, pieces=None):
    """Euclidean projection of ``p`` onto the constraint set of ``g``."""
    pieces = pieces or canonicalize(g)
    nv = pieces.n_var
    diag = np.zeros(nv)
    diag[: g.n] = 1.0
    c = np.zeros(nv)
    c[: g.n] = -np.asarray(p, dtype=float)
    sol = qpsolver.solve(qpsolver.QpProblem(c=c, p_diag=diag, A=pieces.A, b=pieces.b,
                                            C=pieces.C, d=pieces.d))
    if not sol.optimal:
        raise InfeasibleBase(f"projection failed with status {sol.status.value}")
    return pieces.restrict(sol.x)


def sample_feasible(g: StructuredFunction, count, rng=None, center=None, spread=1.0):
    """Feasible points obtained by projecting random Gaussian points."""
    rng = np.random.default_rng(rng)
    pieces = canonicalize(g)
    base = np.zeros(g.n) if center is None else np.asarray(center, dtype=float)
    pts = []
    for k in range(count):
        scale = spread * (10.0 ** rng.uniform(-3, 1))
        pts.append(project(g, base + scale * rng.standard_normal(g.n), pieces))
    return np.array(pts)


def subgradient_valid(g: StructuredFunction, x, q, probes=100, rng=None, pool=None) -> float:
    """Max over sampled feasible ``u`` of ``g(x) + q^T (u - x) - g(u)``.

    Half the probes are feasible points spread over the set (``pool`` when
    given, else projections of random points); the other half are convex
    combinations ``x + s (u - x)`` with small ``s``, which stay feasible.
    A valid subgradient gives a value no larger than solver accuracy.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    gx = g.eval(x)
    if not math.isfinite(gx):
        raise InfeasibleBase("g is infinite at the base point")
    rng = np.random.default_rng(rng)
    n_far = probes - probes // 2
    if pool is None:
        pool = sample_feasible(g, n_far, rng, center=x, spread=10.0)
    pool = np.asarray(pool, dtype=float)
    far = pool[rng.choice(len(pool), size=n_far, replace=len(pool) < n_far)]
    steps = 10.0 ** rng.uniform(-4, -1, probes // 2)
    anchors = pool[rng.integers(len(pool), size=probes // 2)]
    near = x + steps[:, None] * (anchors - x)
    worst = -math.inf
    for u in np.vstack([near, far]):
        worst = max(worst, gx + q @ (u - x) - g.cost(u))
    return float(worst)
