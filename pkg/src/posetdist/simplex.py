"""Small dense LP solver: two-phase revised simplex, Bland's rule on stalls.

Solves   min c.x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

Every LP in this library is desk-scale (a few hundred rows at most), so each
iteration refactorizes the basis from the original data: the returned point
always satisfies the constraints to linear-solve precision, with no pivot
drift to accumulate. Pricing is most-negative-reduced-cost; when the objective
stalls on degenerate pivots the solver switches to Bland's anti-cycling rule,
which guarantees termination. The feasibility contract is the 1e-9 tolerance.
"""

from __future__ import annotations

import numpy as np

TOL = 1e-9
_MAX_ITER = 100_000
_STALL_LIMIT = 50


class LpError(RuntimeError):
    pass


class LpInfeasibleError(LpError):
    pass


class LpUnboundedError(LpError):
    pass


def _simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: np.ndarray, n_enterable: int):
    """Run the revised simplex to optimality from a feasible basis.

    Only columns below n_enterable may enter (lets phase 2 lock out
    artificials). Returns (basis, x_basic).
    """
    m = A.shape[0]
    bland = False
    stall = 0
    prev_obj = np.inf
    for _ in range(_MAX_ITER):
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
        np.maximum(xB, 0.0, out=xB)  # clip solve noise on degenerate rows
        obj = float(c[basis] @ xB)
        if obj < prev_obj - 1e-12:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        prev_obj = obj
        y = np.linalg.solve(B.T, c[basis])
        reduced = c[:n_enterable] - A[:, :n_enterable].T @ y
        reduced[basis[basis < n_enterable]] = 0.0
        if bland:
            nz = np.nonzero(reduced < -TOL)[0]
            enter = int(nz[0]) if nz.size else -1
        else:
            j = int(np.argmin(reduced))
            enter = j if reduced[j] < -TOL else -1
        if enter < 0:
            return basis, xB
        d = np.linalg.solve(B, A[:, enter])
        pos = d > TOL
        if not pos.any():
            raise LpUnboundedError("objective unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = xB[pos] / d[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + TOL)[0]
        if bland:
            leave = int(ties[np.argmin(basis[ties])])
        else:
            leave = int(ties[np.argmax(d[ties])])
        basis[leave] = enter
    raise LpError("simplex iteration limit exceeded")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> tuple[float, np.ndarray]:
    """Return (objective, x) for the minimization LP; raises on infeasible/unbounded."""
    c = np.asarray(c, dtype=float)
    nvar = c.size
    blocks = []
    rhs_parts = []
    n_ub = 0
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        blocks.append(A_ub)
        rhs_parts.append(np.asarray(b_ub, dtype=float).ravel())
        n_ub = A_ub.shape[0]
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        blocks.append(A_eq)
        rhs_parts.append(np.asarray(b_eq, dtype=float).ravel())
    if not blocks:
        if np.all(c >= -TOL):
            return 0.0, np.zeros(nvar)
        raise LpUnboundedError("no constraints and a negative cost direction")
    A0 = np.vstack(blocks)
    b0 = np.concatenate(rhs_parts)
    m = A0.shape[0]

    # Slacks for the <= rows, then flip rows to nonnegative rhs, then one
    # artificial per row as the phase-1 identity basis.
    A = np.hstack([A0, np.zeros((m, n_ub))])
    for i in range(n_ub):
        A[i, nvar + i] = 1.0
    b = b0.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    n_real = nvar + n_ub
    A = np.hstack([A, np.eye(m)])
    basis = np.arange(n_real, n_real + m)

    c1 = np.zeros(n_real + m)
    c1[n_real:] = 1.0
    basis, xB = _simplex(A, b, c1, basis, n_real + m)
    art_level = float(xB[basis >= n_real].sum())
    if art_level > 1e-7:
        raise LpInfeasibleError(f"phase-1 residual {art_level:g}")

    # Remove artificials from the basis: pivot onto any real column with a
    # nonzero coefficient in that row of B^-1 A, else the row is redundant.
    drop_rows = []
    for i in range(m):
        if basis[i] < n_real:
            continue
        row = np.linalg.solve(A[:, basis], A[:, :n_real])[i]
        row[basis[basis < n_real]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-7:
            basis[i] = j
        else:
            drop_rows.append(i)
    if drop_rows:
        keep = np.setdiff1d(np.arange(m), drop_rows)
        A = A[keep]
        b = b[keep]
        basis = basis[keep]
        if basis.size == 0:
            if np.all(c >= -TOL):
                return 0.0, np.zeros(nvar)
            raise LpUnboundedError("all rows redundant with a negative cost direction")

    c2 = np.zeros(A.shape[1])
    c2[:nvar] = c
    basis, xB = _simplex(A, b, c2, basis, n_real)
    x = np.zeros(A.shape[1])
    x[basis] = xB
    return float(c @ x[:nvar]), x[:nvar]
