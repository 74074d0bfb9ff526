"""Dense two-phase tableau simplex (Bland entering rule, largest-pivot ratio ties).

This is the reference solver: slow, dependency-free and fully deterministic.
It is meant for small problems (tests, cross-checks); production solves go
through HiGHS in :mod:`zonotube.opt.lp`.
"""

import numpy as np

_PIVOT_TOL = 1e-9


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _run(T, basis, n_allowed, max_iter):
    """Minimize the objective held in the last row of ``T``.

    Columns ``>= n_allowed`` never enter the basis. Returns a status string.
    """
    m = T.shape[0] - 1
    for _ in range(max_iter):
        reduced = T[-1, :n_allowed]
        entering = np.flatnonzero(reduced < -_PIVOT_TOL)
        if entering.size == 0:
            return "optimal"
        col = int(entering[0])  # Bland: lowest index
        column = T[:m, col]
        # relative threshold keeps tiny, noise-level entries out of the ratio test
        candidates = np.flatnonzero(column > _PIVOT_TOL * max(1.0, np.abs(column).max()))
        if candidates.size == 0:
            return "unbounded"
        ratios = T[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
        # among ties prefer the largest pivot, then Bland's lowest basic index
        row = int(min(tied, key=lambda r: (-round(column[r], 9), basis[r])))
        _pivot(T, basis, row, col)
    return "failure"


def simplex_standard(c, A, b, max_iter=50_000):
    """Solve ``min c^T x  s.t.  A x = b, x >= 0``.

    Returns ``(status, x)`` with status in {optimal, infeasible, unbounded, failure}.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1: artificials n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    status = _run(T, basis, n, max_iter)
    if status != "optimal":
        # phase 1 is bounded below, so anything else is numerical breakdown
        return "failure", None
    if -T[-1, -1] > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
        return "infeasible", None

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > _PIVOT_TOL)
            if nz.size:
                _pivot(T, basis, r, int(nz[0]))
                keep.append(r)
        else:
            keep.append(r)
    rows = keep + [m]
    T = np.ascontiguousarray(T[rows][:, list(range(n)) + [n + m]])
    basis = [basis[r] for r in keep]

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    status = _run(T, basis, n, max_iter)
    if status != "optimal":
        return status, None
    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    return "optimal", x


def simplex_general(c, A_eq, b_eq, A_ub, b_ub, lb, ub):
    """Bounded/general-form wrapper around :func:`simplex_standard`."""
    c = np.asarray(c, dtype=float)
    nv = c.size
    # column map: x_j = offset_j + sum(coef * y_k)
    cols = []  # list of (j, coef)
    offset = np.zeros(nv)
    extra_ub_rows = []  # (col index in y, bound)
    for j in range(nv):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    T = np.zeros((nv, ny))
    for k, (j, coef) in enumerate(cols):
        T[j, k] = coef

    ineq_blocks = []
    rhs_ineq = []
    if A_ub is not None and A_ub.shape[0]:
        ineq_blocks.append(A_ub @ T)
        rhs_ineq.append(b_ub - A_ub @ offset)
    if extra_ub_rows:
        E = np.zeros((len(extra_ub_rows), ny))
        for r, (k, bound) in enumerate(extra_ub_rows):
            E[r, k] = 1.0
        ineq_blocks.append(E)
        rhs_ineq.append(np.array([bnd for _, bnd in extra_ub_rows]))
    n_ineq = sum(blk.shape[0] for blk in ineq_blocks)

    rows = []
    rhs = []
    if A_eq is not None and A_eq.shape[0]:
        rows.append(np.hstack([A_eq @ T, np.zeros((A_eq.shape[0], n_ineq))]))
        rhs.append(b_eq - A_eq @ offset)
    if n_ineq:
        Ai = np.vstack(ineq_blocks)
        rows.append(np.hstack([Ai, np.eye(n_ineq)]))
        rhs.append(np.concatenate(rhs_ineq))
    if not rows:
        # only bounds: minimize coordinatewise
        y = np.zeros(ny)
        cy = c @ T
        if np.any(cy < -_PIVOT_TOL):
            return "unbounded", None
        return "optimal", offset + T @ y
    A_std = np.vstack(rows)
    b_std = np.concatenate(rhs)
    c_std = np.concatenate([c @ T, np.zeros(n_ineq)])
    status, y = simplex_standard(c_std, A_std, b_std)
    if status != "optimal":
        return status, None
    return "optimal", offset + T @ y[:ny]
