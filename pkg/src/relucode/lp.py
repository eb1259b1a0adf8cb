"""Dense two-phase simplex kernel.

Solves the small linear programs behind interior-point finding and adjacency
certification. Problems here are tiny (tens of rows, a handful of variables),
so the tableau is kept dense and pivoting uses Bland's rule throughout, which
cannot cycle. Robustness over speed; no external solver.

The working tableau is per-call state; concurrent calls never share memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError

# Reduced-cost / pivot threshold. Rows are expected to arrive decently scaled
# (callers normalize); one decade below the 1e-9 strictness used downstream.
_TOL = 1e-10
_FEAS_TOL = 1e-8

DEFAULT_MAX_ITER = 20000


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _iterate(T: np.ndarray, basis: list[int], iterations: int, max_iter: int):
    """Run Bland-rule pivots until optimal or unbounded. Mutates T and basis."""
    n_cols = T.shape[1] - 1
    while True:
        entering = -1
        for j in range(n_cols):
            if T[-1, j] < -_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal", iterations
        rows = np.flatnonzero(T[:-1, entering] > _TOL)
        if len(rows) == 0:
            return "unbounded", iterations
        ratios = T[rows, -1] / T[rows, entering]
        best = ratios.min()
        # Bland tie-break: among minimum-ratio rows, leave the smallest basis index
        tied = rows[ratios <= best + _TOL * (1.0 + abs(best))]
        leave = min(tied, key=lambda i: basis[i])
        _pivot(T, leave, entering)
        basis[leave] = entering
        iterations += 1
        if iterations > max_iter:
            raise NumericalFailureError(
                f"simplex iteration limit {max_iter} exceeded",
                iterations=iterations,
            )


def solve_standard_form(c, A, b, max_iter: int = DEFAULT_MAX_ITER) -> SimplexResult:
    """min c.x subject to A x = b, x >= 0.

    Two phases: artificial variables establish feasibility, then the true
    objective is optimized. Raises NumericalFailureError if the pivot budget
    runs out.
    """
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: minimize the sum of artificials
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, n : n + m] = 1.0
    T[m] -= T[:m].sum(axis=0)
    basis = list(range(n, n + m))
    status, iterations = _iterate(T, basis, 0, max_iter)
    phase1_obj = -T[-1, -1]
    if status != "optimal" or phase1_obj > _FEAS_TOL:
        return SimplexResult("infeasible", None, None, iterations)

    # Drive leftover artificials out of the basis; redundant rows get dropped.
    drop_rows = []
    for i in range(m):
        if basis[i] >= n:
            piv_col = -1
            for j in range(n):
                if abs(T[i, j]) > _TOL:
                    piv_col = j
                    break
            if piv_col < 0:
                drop_rows.append(i)
            else:
                _pivot(T, i, piv_col)
                basis[i] = piv_col
    if drop_rows:
        keep = [i for i in range(m) if i not in drop_rows]
        T = T[keep + [m]]
        basis = [basis[i] for i in keep]
        m = len(keep)
    T = np.hstack([T[:, :n], T[:, -1:]])

    # Phase 2: the real objective, reduced against the current basis
    T[-1, :n] = c
    T[-1, -1] = 0.0
    for i, jb in enumerate(basis):
        T[-1] -= T[-1, jb] * T[i]
    status, iterations = _iterate(T, basis, iterations, max_iter)
    if status == "unbounded":
        return SimplexResult("unbounded", None, None, iterations)
    x = np.zeros(n)
    for i, jb in enumerate(basis):
        x[jb] = T[i, -1]
    return SimplexResult("optimal", x, float(c @ x), iterations)


def solve_inequality_max(c, A, b, max_iter: int = DEFAULT_MAX_ITER) -> SimplexResult:
    """max c.y subject to A y <= b, y free (sign-unrestricted).

    Standard-form augmentation: y is split into a difference of nonnegative
    parts and each row gets a slack.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    A_std = np.hstack([A, -A, np.eye(m)])
    c_std = np.concatenate([-c, c, np.zeros(m)])
    res = solve_standard_form(c_std, A_std, b, max_iter=max_iter)
    if res.status != "optimal":
        return SimplexResult(res.status, None, None, res.iterations)
    y = res.x[:n] - res.x[n : 2 * n]
    return SimplexResult("optimal", y, float(c @ y), res.iterations)
