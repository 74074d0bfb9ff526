"""Maximum-volume contractive ellipsoid inside a pair of polytopes.

Solves, for ``E = {x : x^T P^{-1} x <= 1}``::

    max  log det P
    s.t. A_f P A_f^T <= lam_f P                     (matrix inequality)
         Q_x[i] P Q_x[i]^T <= q_x[i]^2              (E inside the state polytope)
         (Q_u K_f)[j] P (Q_u K_f)[j]^T <= q_u[j]^2  (K_f E inside the input polytope)

The half-space conditions are the row-wise support-function bounds
``||P^{1/2} a|| <= b``; they are exact for ellipsoid-in-polytope inclusion.

The solver is a primal log-barrier method with damped Newton steps over the
``n(n+1)/2`` free entries of ``P``; intended for the small ``n`` of tube MPC.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from zonotube.config import get_tolerances
from zonotube.errors import InfeasibleError
from zonotube.sets.types import Ellipsoid


@dataclass(frozen=True)
class MaxVolEllipsoidProblem:
    A_f: np.ndarray
    Q_x: np.ndarray
    q_x: np.ndarray
    Q_u: np.ndarray
    q_u: np.ndarray
    K_f: np.ndarray
    lam_f: float = 1.0

    def __post_init__(self):
        for name in ("A_f", "Q_x", "Q_u", "K_f"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        for name in ("q_x", "q_u"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = self.A_f.shape[0]
        if self.A_f.shape != (n, n):
            raise ValueError("A_f must be square")
        if self.Q_x.shape[1] != n or self.K_f.shape[1] != n or self.Q_u.shape[1] != self.K_f.shape[0]:
            raise ValueError("inconsistent dimensions in max-volume ellipsoid problem")
        if np.any(self.q_x <= 0) or np.any(self.q_u <= 0):
            raise ValueError("polytope offsets must be strictly positive (origin in the interior)")
        if not 0.0 < self.lam_f <= 1.0:
            raise ValueError("lam_f must lie in (0, 1]")

    @property
    def dim(self):
        return self.A_f.shape[0]

    def halfspace_rows(self):
        """Stacked ``(a, b)`` pairs for the row-wise inclusion constraints."""
        rows = np.vstack([self.Q_x, self.Q_u @ self.K_f])
        bounds = np.concatenate([self.q_x, self.q_u])
        return rows, bounds


@dataclass
class LmiReport:
    contraction: float
    state: float
    input: float
    margin: float

    @property
    def passed(self):
        return min(self.contraction, self.state, self.input) >= -self.margin


def _rowwise_slack(rows, bounds, P):
    if rows.shape[0] == 0:
        return np.inf
    quad = np.einsum("ij,jk,ik->i", rows, P, rows)
    return float(np.min(bounds**2 - quad))


def check_lmis(P, problem):
    """Smallest eigenvalue (or scalar slack) of each constraint block at ``P``."""
    P = P.P if isinstance(P, Ellipsoid) else np.asarray(P, dtype=float)
    A = problem.A_f
    S = problem.lam_f * P - A @ P @ A.T
    contraction = float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())
    state = _rowwise_slack(problem.Q_x, problem.q_x, P)
    inp = _rowwise_slack(problem.Q_u @ problem.K_f, problem.q_u, P)
    return LmiReport(contraction, state, inp, get_tolerances().psd_margin)


def _sym_basis(n):
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return basis


def _vec_to_mat(p, basis):
    return np.tensordot(p, np.array(basis), axes=1)


def _mat_to_vec(P, n):
    return np.array([P[i, j] for i in range(n) for j in range(i, n)])


def solve_maxvol_ellipsoid(problem, t0=1.0, mu=8.0, gap=1e-11, max_newton=200):
    """Return the maximum-volume ellipsoid for ``problem``.

    Raises :class:`InfeasibleError` if no strictly feasible ``P`` exists.
    """
    n = problem.dim
    A, lam = problem.A_f, problem.lam_f
    rows, bounds = problem.halfspace_rows()
    active = np.linalg.norm(rows, axis=1) > 0
    rows, bounds = rows[active], bounds[active]

    if np.max(np.abs(np.linalg.eigvals(A)), initial=0.0) >= np.sqrt(lam) * (1 - 1e-12):
        raise InfeasibleError("closed loop not contractive at the requested rate",
                              reason="terminal_set_infeasible")
    Asc = A / np.sqrt(lam)
    X = solve_discrete_lyapunov(Asc, np.eye(n))
    X = 0.5 * (X + X.T)
    if rows.shape[0]:
        quad = np.einsum("ij,jk,ik->i", rows, X, rows)
        X = X * 0.5 * float(np.min(bounds**2 / quad))

    basis = _sym_basis(n)
    D_con = [lam * E - A @ E @ A.T for E in basis]
    a = np.array([[r @ E @ r for E in basis] for r in rows]).reshape(rows.shape[0], len(basis))
    b2 = bounds**2
    degree = 2 * n + rows.shape[0]

    def barrier(p, t):
        P = _vec_to_mat(p, basis)
        S = lam * P - A @ P @ A.T
        s = b2 - a @ p
        try:
            cP = np.linalg.cholesky(P)
            cS = np.linalg.cholesky(0.5 * (S + S.T))
        except np.linalg.LinAlgError:
            return np.inf, P, S, s
        if np.any(s <= 0):
            return np.inf, P, S, s
        val = -t * 2 * np.log(np.diag(cP)).sum() - 2 * np.log(np.diag(cS)).sum() - np.log(s).sum()
        return val, P, S, s

    p = _mat_to_vec(X, n)
    t = t0
    while True:
        for _ in range(max_newton):
            val, P, S, s = barrier(p, t)
            Pi = np.linalg.inv(P)
            Si = np.linalg.inv(S)
            PiE = [Pi @ E for E in basis]
            SiD = [Si @ D for D in D_con]
            g = np.array([-t * np.trace(M1) - np.trace(M2) for M1, M2 in zip(PiE, SiD)])
            g += a.T @ (1.0 / s)
            k = len(basis)
            Hm = np.empty((k, k))
            for i in range(k):
                for j in range(i, k):
                    Hm[i, j] = Hm[j, i] = t * np.sum(PiE[i] * PiE[j].T) + np.sum(SiD[i] * SiD[j].T)
            Hm += (a / s[:, None]).T @ (a / s[:, None])
            step = -np.linalg.solve(Hm, g)
            decrement = float(-g @ step)
            if decrement / 2 <= 1e-12:
                break
            alpha = 1.0
            while alpha > 1e-14:
                new_val, *_ = barrier(p + alpha * step, t)
                if new_val <= val + 0.25 * alpha * g @ step:
                    break
                alpha *= 0.5
            p = p + alpha * step
        if degree / t < gap:
            break
        t *= mu

    P = _vec_to_mat(p, basis)
    return Ellipsoid(0.5 * (P + P.T))
