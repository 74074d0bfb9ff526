"""Tube MPC as a single linear program.

At every step the nominal trajectory ``(xbar, ubar)`` minimizes
``beta + t_P`` where ``beta`` bounds both the summed state gauges and the
summed input gauges (a joint slack) and ``t_P`` is the terminal gauge. The
terminal state must lie in the zonotope ``Z_f``; all nominal states and inputs
respect the tightened constraint polytopes. The applied input is
``ubar(0) + K (xhat - xbar(0))``.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from zonotube.config import get_tolerances
from zonotube.errors import DimensionMismatchError, InfeasibleError
from zonotube.opt import LinearProgram, solve_lp
from zonotube.sets import ConstrainedZonotope, HPolytope, check_c_set, contains, support_function


class _Builder:
    """Accumulates sparse LP rows by variable blocks."""

    def __init__(self):
        self.nv = 0
        self.blocks = {}
        self.eq = ([], [], [], [])  # rows, cols, vals, rhs
        self.ub = ([], [], [], [])
        self.lb = []
        self.ubd = []

    def add_vars(self, name, count, lb=-np.inf, ub=np.inf):
        start = self.nv
        self.blocks[name] = np.arange(start, start + count)
        self.nv += count
        self.lb.extend([lb] * count)
        self.ubd.extend([ub] * count)
        return self.blocks[name]

    def _add(self, store, terms, rhs):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        base = len(store[3])
        for cols, M in terms:
            M = sp.coo_matrix(np.atleast_2d(M))
            store[0].extend(M.row + base)
            store[1].extend(np.asarray(cols)[M.col])
            store[2].extend(M.data)
        store[3].extend(rhs)

    def eq_rows(self, terms, rhs):
        self._add(self.eq, terms, rhs)

    def ub_rows(self, terms, rhs):
        self._add(self.ub, terms, rhs)

    def build(self, c):
        def mat(store):
            return sp.csr_matrix((store[2], (store[0], store[1])), shape=(len(store[3]), self.nv))
        return LinearProgram(c, A_eq=mat(self.eq), b_eq=np.array(self.eq[3]), A_ub=mat(self.ub),
                             b_ub=np.array(self.ub[3]), lb=np.array(self.lb), ub=np.array(self.ubd))


def _gauge_epigraph(b, s, xcols, tcol, tag):
    """Rows encoding ``x in t s`` for an origin-centered C-set ``s``."""
    if s.num_constraints == 0 and s.num_generators == s.dim:
        Ginv = np.linalg.inv(s.G)
        one = np.ones((s.dim, 1))
        b.ub_rows([(xcols, Ginv), ([tcol], -one)], np.zeros(s.dim))
        b.ub_rows([(xcols, -Ginv), ([tcol], -one)], np.zeros(s.dim))
        return
    beta = b.add_vars(tag, s.num_generators)
    b.eq_rows([(xcols, np.eye(s.dim)), (beta, -s.G)], np.zeros(s.dim))
    if s.num_constraints:
        b.eq_rows([(beta, s.F), ([tcol], -s.theta[:, None])], np.zeros(s.num_constraints))
    I = np.eye(s.num_generators)
    one = np.ones((s.num_generators, 1))
    b.ub_rows([(beta, I), ([tcol], -one)], np.zeros(s.num_generators))
    b.ub_rows([(beta, -I), ([tcol], -one)], np.zeros(s.num_generators))


def _membership(b, z, xcols, tag, offset=None):
    """Rows encoding ``x (+ offset) in z`` through fresh coefficients in [-1, 1]."""
    a = b.add_vars(tag, z.num_generators, -1.0, 1.0)
    rhs = z.c.copy() if offset is None else z.c - offset
    b.eq_rows([(xcols, np.eye(z.dim)), (a, -z.G)], rhs)
    if z.num_constraints:
        b.eq_rows([(a, z.F)], z.theta)


@dataclass
class MpcConfig:
    """Everything the online LP needs.

    ``Z_xdev`` may be None, in which case no tube condition links the estimate
    and the nominal state (used by the certainty-equivalence baseline).

    ``tie_break`` adds ``tie_break * sum_j t_Q(j)`` to the objective. The
    joint slack leaves many optima whenever the input sum is the binding one,
    and a vertex solver may then return a plan that postpones all motion;
    re-planning from the shifted nominal repeats the postponement forever. The
    small secondary term picks, among (near-)optimal plans, the one that
    moves earliest.
    """

    A: np.ndarray
    B: np.ndarray
    N: int
    Q: ConstrainedZonotope
    R: ConstrainedZonotope
    P: ConstrainedZonotope
    S_xbar: HPolytope
    S_ubar: HPolytope
    Z_f: ConstrainedZonotope
    K: np.ndarray
    Z_xdev: ConstrainedZonotope = None
    tie_break: float = 1e-6

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if int(self.N) < 1:
            raise ValueError("horizon must be at least 1")
        self.N = int(self.N)
        n, m = self.B.shape
        if self.A.shape != (n, n) or self.K.shape != (m, n):
            raise DimensionMismatchError("inconsistent MPC matrices")
        for s in (self.Q, self.P):
            check_c_set(s)
        check_c_set(self.R)
        tol = get_tolerances().feasibility
        for row, bound in zip(self.S_xbar.Q, self.S_xbar.q):
            if support_function(self.Z_f, row) > bound + tol:
                raise ValueError("terminal zonotope is not inside the tightened state set")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass
class MpcSolution:
    xbar: np.ndarray
    ubar: np.ndarray
    beta: float
    t_Q: np.ndarray
    t_R: np.ndarray
    t_P: float
    objective: float
    status: str
    residuals: dict
    num_vars: int = 0
    num_rows: int = 0
    solve_time: float = 0.0


def build_mpc_lp(cfg, xhat, xbar_init=None):
    """Assemble the tube-MPC LP. Returns ``(LinearProgram, variable index blocks)``.

    With ``xbar_init`` the first nominal state is pinned to it; otherwise it
    is a decision variable tied to the estimate by ``xhat - xbar(0) in Z_xdev``
    (or pinned to ``xhat`` when there is no deviation set).
    """
    n, m, N = cfg.n, cfg.m, cfg.N
    xhat = np.asarray(xhat, dtype=float).reshape(-1)
    if xhat.size != n:
        raise DimensionMismatchError("estimate has wrong dimension")
    b = _Builder()
    X = b.add_vars("x", n * (N + 1)).reshape(N + 1, n)
    U = b.add_vars("u", m * N).reshape(N, m)
    beta = b.add_vars("beta", 1, 0.0)[0]
    tQ = b.add_vars("tQ", N, 0.0)
    tR = b.add_vars("tR", N, 0.0)
    tP = b.add_vars("tP", 1, 0.0)[0]

    if xbar_init is not None:
        xbar_init = np.asarray(xbar_init, dtype=float).reshape(-1)
        if cfg.Z_xdev is not None and not contains(cfg.Z_xdev, xhat - xbar_init):
            raise InfeasibleError("estimate is outside the deviation tube around the anchor",
                                  reason="anchor_outside_tube")
        b.eq_rows([(X[0], np.eye(n))], xbar_init)
    elif cfg.Z_xdev is not None:
        # xhat - x0 in Z_xdev  <=>  x0 + (-xhat) in -Z_xdev ; written directly
        z = cfg.Z_xdev
        a = b.add_vars("a_dev", z.num_generators, -1.0, 1.0)
        b.eq_rows([(X[0], np.eye(n)), (a, z.G)], xhat - z.c)
        if z.num_constraints:
            b.eq_rows([(a, z.F)], z.theta)
    else:
        b.eq_rows([(X[0], np.eye(n))], xhat)

    for j in range(N):
        b.eq_rows([(X[j + 1], np.eye(n)), (X[j], -cfg.A), (U[j], -cfg.B)], np.zeros(n))
        b.ub_rows([(X[j], cfg.S_xbar.Q)], cfg.S_xbar.q)
        b.ub_rows([(U[j], cfg.S_ubar.Q)], cfg.S_ubar.q)
        _gauge_epigraph(b, cfg.Q, X[j], tQ[j], f"bQ{j}")
        _gauge_epigraph(b, cfg.R, U[j], tR[j], f"bR{j}")
    b.ub_rows([(tQ, np.ones((1, N))), ([beta], -np.ones((1, 1)))], [0.0])
    b.ub_rows([(tR, np.ones((1, N))), ([beta], -np.ones((1, 1)))], [0.0])
    _gauge_epigraph(b, cfg.P, X[N], tP, "bP")
    _membership(b, cfg.Z_f, X[N], "a_f")

    c = np.zeros(b.nv)
    c[beta] = 1.0
    c[tP] = 1.0
    c[tQ] = cfg.tie_break
    return b.build(c), b.blocks


def solve_mpc(cfg, xhat, xbar_init=None, step=None):
    """Solve the tube-MPC LP; raises :class:`InfeasibleError` (with ``step``) on failure."""
    lp, blocks = build_mpc_lp(cfg, xhat, xbar_init)
    t0 = time.perf_counter()
    sol = solve_lp(lp)
    elapsed = time.perf_counter() - t0
    if not sol.ok:
        raise InfeasibleError(f"MPC LP {sol.status} at step {step}: {sol.message}",
                              reason="mpc_infeasible", step=step)
    x = sol.x
    n, m, N = cfg.n, cfg.m, cfg.N
    xbar = x[blocks["x"]].reshape(N + 1, n)
    ubar = x[blocks["u"]].reshape(N, m)
    dyn = max(float(np.max(np.abs(xbar[j + 1] - cfg.A @ xbar[j] - cfg.B @ ubar[j]))) for j in range(N))
    state = max(float(np.max(cfg.S_xbar.Q @ xbar[j] - cfg.S_xbar.q)) for j in range(N))
    inp = max(float(np.max(cfg.S_ubar.Q @ ubar[j] - cfg.S_ubar.q)) for j in range(N))
    a_f = x[blocks["a_f"]]
    term = float(np.max(np.abs(xbar[N] - cfg.Z_f.c - cfg.Z_f.G @ a_f), initial=0.0))
    residuals = {"dynamics": dyn, "state": max(0.0, state), "input": max(0.0, inp), "terminal": term}
    return MpcSolution(xbar, ubar, float(x[blocks["beta"][0]]), x[blocks["tQ"]], x[blocks["tR"]],
                       float(x[blocks["tP"][0]]), float(sol.fun), sol.status, residuals,
                       lp.c.size, lp.A_eq.shape[0] + lp.A_ub.shape[0], elapsed)


def control_law(sol, xhat, K):
    """``ubar*(0) + K (xhat - xbar*(0))``."""
    return sol.ubar[0] + np.atleast_2d(K) @ (np.asarray(xhat, dtype=float) - sol.xbar[0])


def advance_nominal(sol):
    """Anchor for the next step: the predicted nominal state ``xbar*(1)``."""
    return sol.xbar[1].copy()
