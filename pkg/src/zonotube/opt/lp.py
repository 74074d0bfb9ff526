"""Linear programs: problem container, solver front-end, LP-format dump.

Two backends sit behind :func:`solve_lp`:

* ``"highs"`` (default) delegates to HiGHS through :func:`scipy.optimize.linprog`;
* ``"simplex"`` is the in-house dense Bland's-rule simplex, used as the
  reference in tests.

Both return an :class:`LpSolution` whose residual is recomputed here, so the
caller never has to trust a backend's own feasibility report.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from zonotube.config import get_tolerances
from zonotube.opt.simplex import simplex_general

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILURE = "failure"


def _as_matrix(M, ncols):
    if M is None:
        return np.zeros((0, ncols))
    if sp.issparse(M):
        return M.tocsr()
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((0, ncols))
    return M


def _as_vector(v, size):
    if v is None:
        return np.zeros(size)
    return np.asarray(v, dtype=float).reshape(-1)


@dataclass
class LinearProgram:
    """``min c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub``.

    ``lb``/``ub`` default to ``-inf``/``+inf`` (free variables). Matrices may be
    dense arrays or scipy sparse matrices.
    """

    c: np.ndarray
    A_eq: object = None
    b_eq: np.ndarray = None
    A_ub: object = None
    b_ub: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    names: list = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_eq = _as_matrix(self.A_eq, n)
        self.A_ub = _as_matrix(self.A_ub, n)
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0])
        self.b_ub = _as_vector(self.b_ub, self.A_ub.shape[0])
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(-1)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(-1)
        for name, M, b in (("A_eq", self.A_eq, self.b_eq), ("A_ub", self.A_ub, self.b_ub)):
            if M.shape[1] != n:
                raise ValueError(f"{name} has {M.shape[1]} columns, expected {n}")
            if M.shape[0] != b.size:
                raise ValueError(f"{name} has {M.shape[0]} rows but rhs has {b.size} entries")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bounds must have one entry per variable")
        for arr in (self.c, self.b_eq, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")

    @property
    def num_vars(self):
        return self.c.size

    def residual(self, x):
        """Largest violation of any constraint or bound at ``x``."""
        worst = 0.0
        if self.A_eq.shape[0]:
            worst = max(worst, float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        if self.A_ub.shape[0]:
            worst = max(worst, float(np.max(self.A_ub @ x - self.b_ub, initial=0.0)))
        worst = max(worst, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        return worst


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    fun: float = None
    residual: float = None
    message: str = ""

    @property
    def ok(self):
        return self.status == OPTIMAL


def _solve_highs(p):
    bounds = np.column_stack([p.lb, p.ub])
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi) for lo, hi in bounds]
    res = linprog(
        p.c,
        A_ub=p.A_ub if p.A_ub.shape[0] else None,
        b_ub=p.b_ub if p.A_ub.shape[0] else None,
        A_eq=p.A_eq if p.A_eq.shape[0] else None,
        b_eq=p.b_eq if p.A_eq.shape[0] else None,
        bounds=bounds,
        method="highs",
    )
    status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, FAILURE)
    return status, (res.x if status == OPTIMAL else None), res.message


def _solve_reference(p):
    dense = lambda M: M.toarray() if sp.issparse(M) else M  # noqa: E731
    status, x = simplex_general(p.c, dense(p.A_eq), p.b_eq, dense(p.A_ub), p.b_ub, p.lb, p.ub)
    return status, x, "reference simplex"


def solve_lp(p, backend="highs"):
    """Solve ``p``; never raises on numerical trouble (reports ``failure``)."""
    try:
        if backend == "highs":
            status, x, msg = _solve_highs(p)
        elif backend == "simplex":
            status, x, msg = _solve_reference(p)
        else:
            raise ValueError(f"unknown LP backend {backend!r}")
    except (np.linalg.LinAlgError, FloatingPointError) as err:
        return LpSolution(FAILURE, message=str(err))
    if status != OPTIMAL:
        return LpSolution(status, message=str(msg))
    x = np.asarray(x, dtype=float)
    residual = p.residual(x)
    # Solvers work with relative tolerances; scale the acceptance threshold likewise.
    scale = max(1.0, float(np.max(np.abs(p.b_eq), initial=0.0)), float(np.max(np.abs(p.b_ub), initial=0.0)))
    if residual > 10 * get_tolerances().feasibility * scale:
        return LpSolution(FAILURE, x=x, fun=float(p.c @ x), residual=residual,
                          message=f"residual {residual:.3e} exceeds tolerance")
    return LpSolution(OPTIMAL, x=x, fun=float(p.c @ x), residual=residual, message=str(msg))


def _fmt(v):
    return repr(float(v))


def _linear_terms(row, names):
    terms = []
    for j, a in zip(row.indices if sp.issparse(row) else np.flatnonzero(row),
                    row.data if sp.issparse(row) else row[np.flatnonzero(row)]):
        sign = "-" if a < 0 else "+"
        terms.append(f"{sign} {_fmt(abs(a))} {names[j]}")
    return " ".join(terms) if terms else "0 " + names[0]


def write_lp(p, path):
    """Dump ``p`` in CPLEX LP text format for external cross-checking."""
    names = p.names or [f"x{j}" for j in range(p.num_vars)]
    lines = ["\\ generated by zonotube", "Minimize", " obj: " + _linear_terms(p.c, names), "Subject To"]
    A_eq = sp.csr_matrix(p.A_eq)
    A_ub = sp.csr_matrix(p.A_ub)
    for i in range(A_eq.shape[0]):
        lines.append(f" e{i}: {_linear_terms(A_eq.getrow(i), names)} = {_fmt(p.b_eq[i])}")
    for i in range(A_ub.shape[0]):
        lines.append(f" u{i}: {_linear_terms(A_ub.getrow(i), names)} <= {_fmt(p.b_ub[i])}")
    lines.append("Bounds")
    for j, nm in enumerate(names):
        lo, hi = p.lb[j], p.ub[j]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lines.append(f" {nm} free")
        else:
            lo_s = _fmt(lo) if np.isfinite(lo) else "-inf"
            hi_s = _fmt(hi) if np.isfinite(hi) else "+inf"
            lines.append(f" {lo_s} <= {nm} <= {hi_s}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
