"""Slow reference solver for the dual problem, used only by tests.

min 0.5 a'Qa  s.t.  0 <= a_i <= C,  sum(a) = 1

Projected gradient with step 1/lambda_max(Q); the projection onto the
capped simplex bisects on the shift tau with sum(clip(a - tau, 0, C)) = 1.
Independent of the production solver on purpose: different algorithm,
different math, same optimum.
"""

import numpy as np


def project_capped_simplex(a: np.ndarray, C: float) -> np.ndarray:
    """Euclidean projection onto {0 <= x <= C, sum(x) = 1}."""
    n = a.size
    assert n * C >= 1.0 - 1e-12, "infeasible cap"

    def mass(tau):
        return np.clip(a - tau, 0.0, C).sum()

    lo = a.min() - C - 1.0   # mass(lo) >= nC >= 1
    hi = a.max()             # mass(hi) = 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return np.clip(a - 0.5 * (lo + hi), 0.0, C)


def solve_qp(Q: np.ndarray, C: float, iters: int = 50_000, tol: float = 1e-14):
    """Returns (alpha, objective) at (near) optimum."""
    n = Q.shape[0]
    step = 1.0 / max(float(np.linalg.eigvalsh(Q)[-1]), 1e-12)
    a = project_capped_simplex(np.full(n, 1.0 / n), C)
    obj = 0.5 * float(a @ Q @ a)
    for _ in range(iters):
        a_new = project_capped_simplex(a - step * (Q @ a), C)
        obj_new = 0.5 * float(a_new @ Q @ a_new)
        if np.max(np.abs(a_new - a)) < tol:
            a = a_new
            obj = obj_new
            break
        a = a_new
        obj = obj_new
    return a, obj


def dual_objective(Q: np.ndarray, a: np.ndarray) -> float:
    return 0.5 * float(a @ Q @ a)


def kkt_violation(Q: np.ndarray, a: np.ndarray, C: float) -> float:
    """max over growable of -G minus min over shrinkable of -G; <= 0 is optimal."""
    G = Q @ a
    up = a < C - 1e-12
    down = a > 1e-12
    if not up.any() or not down.any():
        return 0.0
    return float((-G[up]).max() - (-G[down]).min())
