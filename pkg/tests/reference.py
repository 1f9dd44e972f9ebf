"""Independent brute-force references used as test oracles.

Nothing here imports the package under test except for plain data types.
"""

import itertools
import math

import numpy as np


def simplex_projection(v):
    """Euclidean projection onto the probability simplex by sorting."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u * k > css - 1.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def enumerate_qp(P, c, A, b, C, d, tol=1e-10):
    """Minimize ``1/2 x'Px + c'x`` s.t. ``Ax = b, Cx <= d`` by trying every active set.

    ``P`` must be positive definite so each candidate KKT system is regular.
    Returns the best KKT point found, or ``None`` when infeasible.
    """
    n = P.shape[0]
    best, best_obj = None, math.inf
    for size in range(C.shape[0] + 1):
        for act in itertools.combinations(range(C.shape[0]), size):
            M = np.vstack([A, C[list(act)]])
            if M.shape[0] > n or (M.shape[0] and np.linalg.matrix_rank(M) < M.shape[0]):
                continue
            m = M.shape[0]
            K = np.block([[P, M.T], [M, np.zeros((m, m))]])
            rhs = np.concatenate([-c, b, d[list(act)]])
            sol = np.linalg.solve(K, rhs)
            x, mult = sol[:n], sol[n + A.shape[0]:]
            if np.any(C @ x - d > tol) or np.any(mult < -tol):
                continue
            obj = 0.5 * x @ P @ x + c @ x
            if obj < best_obj:
                best, best_obj = x, obj
    return best


def kelly_optimum(R, pi, iters=5000):
    """Three-asset Kelly optimum: simplex grid search, then projected gradient
    descent (sorting projection, backtracking step) from the best grid point."""
    assert R.shape[1] == 3

    def f(x):
        w = R @ x
        return math.inf if np.min(w) <= 0 else -float(pi @ np.log(w))

    ticks = np.linspace(0, 1, 101)
    grid = [np.array([a, b, 1 - a - b]) for a in ticks for b in ticks if a + b <= 1 + 1e-12]
    x = min(grid, key=f)
    fx, step = f(x), 1.0
    for _ in range(iters):
        grad = -(R.T @ (pi / (R @ x)))
        step *= 2.0
        while True:
            cand = simplex_projection(x - step * grad)
            fc = f(cand)
            if fc <= fx - 0.5 / step * float((cand - x) @ (cand - x)) or step < 1e-16:
                break
            step *= 0.5
        if np.allclose(cand, x, rtol=0, atol=1e-15):
            break
        x, fx = cand, fc
    return x, fx


def cvar_brute(x, eta):
    """``min over alpha`` of the CVaR objective, over all kinks plus a dense grid."""
    x = np.asarray(x, dtype=float)
    grid = np.concatenate([x, np.linspace(x.min(), x.max(), 2001)])
    vals = grid + np.maximum(x[None, :] - grid[:, None], 0.0).mean(axis=1) / (1.0 - eta)
    return float(vals.min())


def evar_brute(x, eta, points=2001, rounds=3):
    """Dense alpha grid with repeated local refinement around the best point."""
    x = np.asarray(x, dtype=float)
    top, mean = x.max(), x.mean()
    if top == mean:
        return float(top)
    log_c = math.log((1.0 - eta) * x.size)

    def value(alphas):
        a = alphas[:, None]
        z = x[None, :] / a
        zmax = z.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
        return alphas * (lse - log_c)

    hi = (top - mean) / math.log(1.0 / (1.0 - eta))
    lo_exp, hi_exp = math.log10(hi) - 12, math.log10(hi)
    alphas = np.logspace(lo_exp, hi_exp, points)
    best = top
    for _ in range(rounds):
        v = value(alphas)
        j = int(np.argmin(v))
        best = min(best, float(v[j]))
        left, right = alphas[max(j - 1, 0)], alphas[min(j + 1, alphas.size - 1)]
        alphas = np.linspace(left, right, points)
    return best
