"""Dual solver for hard-margin ranking problems.

Both preference learners reduce to the same box-constrained quadratic
dual: given a positive semidefinite matrix Q of constraint interactions
and per-constraint margin targets c,

    minimize  0.5 * a' Q a - c' a    subject to  0 <= a <= cap.

The box cap is a large constant standing in for the hard-margin +inf;
a solution touching it is flagged so callers can tell when the margin
constraints were effectively softened.

The solver is coordinate optimization over two-variable working sets:
the first index is the worst violator of the box KKT conditions, the
partner is picked by a second-order (curvature-aware) gain estimate,
and the two-variable subproblem is solved exactly over its box.  The
stopping tolerance scales with the margin targets so that uniformly
scaling c rescales the iterate path instead of changing it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

DEFAULT_CAP = 1e6
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class DualSolution:
    alpha: NDArray
    converged: bool
    iterations: int
    kkt_residual: float
    capped: bool
    objective: float


def _violations(alpha: NDArray, grad: NDArray, cap: float) -> NDArray:
    at_lo = alpha <= 0.0
    at_hi = alpha >= cap
    viol = np.abs(grad)
    viol[at_lo] = np.maximum(0.0, -grad[at_lo])
    viol[at_hi] = np.maximum(0.0, grad[at_hi])
    return viol


def _effective_gradient(alpha: NDArray, grad: NDArray, cap: float) -> NDArray:
    g = grad.copy()
    g[alpha <= 0.0] = np.minimum(grad[alpha <= 0.0], 0.0)
    g[alpha >= cap] = np.maximum(grad[alpha >= cap], 0.0)
    return g


def _solve_box_2d(qii: float, qjj: float, qij: float, gi: float, gj: float,
                  lo_a: float, hi_a: float, lo_b: float, hi_b: float) -> tuple[float, float]:
    """Exact minimizer of a 2-D quadratic over a box (offsets from the iterate)."""

    def value(a: float, b: float) -> float:
        return gi * a + gj * b + 0.5 * (qii * a * a + 2 * qij * a * b + qjj * b * b)

    def line_min(q: float, g: float, lo: float, hi: float) -> float:
        if q > 1e-300:
            return float(np.clip(-g / q, lo, hi))
        return lo if g > 0 else hi

    candidates = []
    det = qii * qjj - qij * qij
    if det > 1e-14 * max(qii * qjj, 1.0):
        a = (-gi * qjj + gj * qij) / det
        b = (-gj * qii + gi * qij) / det
        if lo_a <= a <= hi_a and lo_b <= b <= hi_b:
            return a, b
    for a_edge in (lo_a, hi_a):
        b = line_min(qjj, gj + qij * a_edge, lo_b, hi_b)
        candidates.append((a_edge, b))
    for b_edge in (lo_b, hi_b):
        a = line_min(qii, gi + qij * b_edge, lo_a, hi_a)
        candidates.append((a, b_edge))
    best = min(candidates, key=lambda ab: value(*ab))
    return best


def solve_dual(
    Q: NDArray,
    c: NDArray,
    cap: float = DEFAULT_CAP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> DualSolution:
    """Solve the box-constrained ranking dual.

    Parameters
    ----------
    Q : (n, n) array
        PSD interaction matrix.
    c : (n,) array
        Positive margin targets.
    cap : float
        Upper bound on every dual variable.
    tol : float
        KKT violation tolerance, relative to the largest margin target.
    max_iter : int
        Iteration cap; exceeding it returns converged=False.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be ({n}, {n}), got {Q.shape}")
    if n == 0:
        return DualSolution(np.zeros(0), True, 0, 0.0, False, 0.0)
    if (c <= 0).any():
        raise ValueError("margin targets must be positive")

    alpha = np.zeros(n)
    grad = -c.copy()
    tol_eff = tol * max(1.0, float(np.abs(c).max()))
    diag = np.diag(Q).copy()

    it = 0
    converged = False
    residual = np.inf
    while it < max_iter:
        viol = _violations(alpha, grad, cap)
        i = int(np.argmax(viol))
        residual = float(viol[i])
        if residual <= tol_eff:
            converged = True
            break
        it += 1

        if n == 1:
            j = -1
        else:
            g_eff = _effective_gradient(alpha, grad, cap)
            det = diag[i] * diag - Q[i] ** 2
            safe = det > 1e-12 * np.maximum(diag[i] * diag, 1.0)
            gain = np.where(
                safe,
                (diag * g_eff[i] ** 2 - 2 * Q[i] * g_eff[i] * g_eff + diag[i] * g_eff**2)
                / (2 * np.where(safe, det, 1.0)),
                np.where(diag > 1e-300, g_eff**2 / (2 * np.maximum(diag, 1e-300)), 0.0),
            )
            gain[i] = -np.inf
            j = int(np.argmax(gain))
            if not np.isfinite(gain[j]) or gain[j] <= 0.0:
                j = -1

        if j < 0:
            # single-coordinate exact step
            if diag[i] > 1e-300:
                new = float(np.clip(alpha[i] - grad[i] / diag[i], 0.0, cap))
            else:
                new = 0.0 if grad[i] > 0 else cap
            da = new - alpha[i]
            if da != 0.0:
                alpha[i] = new
                grad += da * Q[i]
            continue

        da, db = _solve_box_2d(
            diag[i], diag[j], Q[i, j], grad[i], grad[j],
            -alpha[i], cap - alpha[i], -alpha[j], cap - alpha[j],
        )
        if da != 0.0:
            alpha[i] += da
            grad += da * Q[i]
        if db != 0.0:
            alpha[j] += db
            grad += db * Q[j]

    objective = float(0.5 * alpha @ Q @ alpha - c @ alpha)
    capped = bool((alpha >= cap * (1 - 1e-9)).any())
    return DualSolution(alpha, converged, it, residual, capped, objective)


def linear_q(diffs: NDArray) -> NDArray:
    """Q matrix for a linear ranking model from difference vectors."""
    d = np.asarray(diffs, dtype=float)
    return d @ d.T
