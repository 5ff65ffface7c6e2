"""Small dense LP solvers with a common interface.

``solve_lp`` solves ``min c.x  s.t.  A x = b`` with each variable either
nonnegative or free.  Two backends are provided: scipy's HiGHS (default, used
for desk-scale problems) and a dense two-phase revised simplex written here,
adequate for a few thousand variables and handy for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


class LPError(RuntimeError):
    def __init__(self, status: str, message: str):
        super().__init__(f"{status}: {message}")
        self.status = status


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int
    primal_residual: float
    backend: str


def _residual(A, x, b) -> float:
    r = A @ x - b
    return float(np.max(np.abs(r))) if len(b) else 0.0


def revised_simplex(c, A, b, tol: float = 1e-9, max_iter: int = 50_000, refactor: int = 64):
    """Two-phase revised simplex for ``min c.x, A x = b, x >= 0`` (dense).

    Dantzig pricing with a switch to Bland's rule after a run of degenerate
    pivots, which rules out cycling.  The basis inverse is updated by
    elementary row operations and recomputed from scratch every ``refactor``
    pivots to keep round-off in check.

    Returns ``(x, iterations)``; raises :class:`LPError` when the problem is
    infeasible or unbounded.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.array(c, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase one: artificial identity block
    T = np.hstack([A, np.eye(m)])
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)
    it = 0

    def run(cost, basis, allowed, it):
        Binv = np.linalg.inv(T[:, basis])
        xB = Binv @ b
        since = 0
        degenerate = 0
        while True:
            if it >= max_iter:
                raise LPError("iteration_limit", f"no convergence after {max_iter} pivots")
            y = cost[basis] @ Binv
            d = cost - y @ T
            d[basis] = 0.0
            d[~allowed] = 0.0
            cand = np.flatnonzero(d < -tol)
            if len(cand) == 0:
                return basis, xB, it
            q = int(cand[0]) if degenerate > 50 else int(cand[np.argmin(d[cand])])
            col = Binv @ T[:, q]
            pos = col > tol
            if not np.any(pos):
                raise LPError("unbounded", "objective decreases without bound")
            ratios = np.full(m, np.inf)
            ratios[pos] = xB[pos] / col[pos]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + tol * max(1.0, abs(theta)))
            r = int(ties[np.argmin(basis[ties])]) if degenerate > 50 else int(ties[np.argmax(col[ties])])
            degenerate = degenerate + 1 if theta <= tol else 0
            # pivot
            piv = col[r]
            xB = xB - theta * col
            xB[r] = theta
            Binv[r] /= piv
            others = np.arange(m) != r
            Binv[others] -= np.outer(col[others], Binv[r])
            basis[r] = q
            it += 1
            since += 1
            if since >= refactor:
                Binv = np.linalg.inv(T[:, basis])
                xB = Binv @ b
                since = 0

    basis, xB, it = run(cost1, basis.copy(), allowed, it)
    infeas = float(np.sum(xB[basis >= n]))
    if infeas > 1e-7 * max(1.0, float(np.abs(b).max(initial=0.0))):
        raise LPError("infeasible", f"phase one left artificial mass {infeas:.3g}")

    # drive remaining (zero-level) artificials out of the basis
    keep_rows = np.ones(m, dtype=bool)
    Binv = np.linalg.inv(T[:, basis])
    for r in range(m):
        if basis[r] < n:
            continue
        row = Binv[r] @ A
        row[basis[basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            basis[r] = j
            Binv = np.linalg.inv(T[:, basis])
        else:
            keep_rows[r] = False  # redundant constraint
    if not np.all(keep_rows):
        rows = np.flatnonzero(keep_rows)
        A, b = A[rows], b[rows]
        T = np.hstack([A, np.eye(len(rows))])
        basis = basis[rows]
        m = len(rows)
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    cost2 = np.concatenate([c, np.zeros(m)])
    basis, xB, it = run(cost2, basis.copy(), allowed, it)
    x = np.zeros(n + m)
    x[basis] = xB
    return np.maximum(x[:n], 0.0), it


def solve_lp(c, A_eq, b_eq, free=None, backend: str = "highs", tol: float = 1e-9) -> LPResult:
    """Solve ``min c.x, A_eq x = b_eq`` with ``x >= 0`` except where ``free`` is set."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    b_eq = np.asarray(b_eq, dtype=float)
    if backend == "highs":
        bounds = np.where(free[:, None], [[-np.inf, np.inf]], [[0.0, np.inf]])
        bnds = [(None if np.isinf(lo) else lo, None) for lo, _ in bounds]
        # presolve occasionally ends in an "unknown" status on degenerate
        # occupation LPs; fall back to the unpresolved simplex, then to IPM
        attempts = [("highs", {}), ("highs-ds", {"presolve": False}), ("highs-ipm", {})]
        for method, extra in attempts:
            opts = {"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol, **extra}
            res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=bnds, method=method, options=opts)
            if res.status != 4:
                break
        if res.status == 2:
            raise LPError("infeasible", res.message)
        if res.status == 3:
            raise LPError("unbounded", res.message)
        if res.status != 0:
            raise LPError("solver_failure", res.message)
        x = res.x
        return LPResult(x, float(res.fun), int(getattr(res, "nit", 0)), _residual(A_eq, x, b_eq), "highs")
    if backend == "simplex":
        Ad = A_eq.toarray() if sp.issparse(A_eq) else np.asarray(A_eq, dtype=float)
        fidx = np.flatnonzero(free)
        # free variables split as x = x+ - x-
        A2 = np.hstack([Ad, -Ad[:, fidx]])
        c2 = np.concatenate([c, -c[fidx]])
        z, it = revised_simplex(c2, A2, b_eq, tol=tol)
        x = z[:n].copy()
        x[fidx] -= z[n:]
        return LPResult(x, float(c @ x), it, _residual(Ad, x, b_eq), "simplex")
    raise ValueError(f"unknown LP backend {backend!r}")
