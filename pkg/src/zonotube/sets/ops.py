"""Closed-form and LP-backed operations on constrained zonotopes."""

import numpy as np
from scipy.linalg import block_diag, null_space

from zonotube.config import get_tolerances
from zonotube.errors import DimensionMismatchError, EmptySetError, GaugeDomainError, SetError
from zonotube.opt.lp import LinearProgram, solve_lp
from zonotube.sets.types import ConstrainedZonotope, Ellipsoid, HPolytope


def _check_same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def minkowski_sum(a, b):
    _check_same_dim(a, b)
    F = block_diag(a.F, b.F) if (a.num_constraints or b.num_constraints) else None
    if F is not None:
        F = np.asarray(F).reshape(a.num_constraints + b.num_constraints, a.num_generators + b.num_generators)
    return ConstrainedZonotope(a.c + b.c, np.hstack([a.G, b.G]), F, np.concatenate([a.theta, b.theta]))


def linear_map(M, z):
    """``M ⊙ z``; constraints are carried over unchanged."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != z.dim:
        raise DimensionMismatchError(f"matrix has {M.shape[1]} columns, set has dimension {z.dim}")
    return ConstrainedZonotope(M @ z.c, M @ z.G, z.F, z.theta)


def contract(z, lam):
    """Scale ``z`` about its own center by ``lam`` in (0, 1]."""
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"contraction ratio must lie in (0, 1], got {lam}")
    return ConstrainedZonotope(z.c, lam * z.G, z.F, z.theta)


def scale(z, rho):
    """``rho ⊙ z`` about the origin (any ``rho > 0``)."""
    if rho <= 0:
        raise ValueError("scale factor must be positive")
    return ConstrainedZonotope(rho * z.c, rho * z.G, z.F, z.theta)


def _alpha_box_lp(z, c_alpha):
    sigma = z.num_generators
    return LinearProgram(c_alpha, A_eq=z.F if z.num_constraints else None,
                         b_eq=z.theta if z.num_constraints else None,
                         lb=-np.ones(sigma), ub=np.ones(sigma))


def is_empty(z):
    if "empty" not in z._cache:
        if z.num_constraints == 0:
            z._cache["empty"] = False
        else:
            sol = solve_lp(_alpha_box_lp(z, np.zeros(z.num_generators)))
            z._cache["empty"] = not sol.ok
    return z._cache["empty"]


def _require_nonempty(z):
    if isinstance(z, ConstrainedZonotope) and is_empty(z):
        raise EmptySetError("operation requires a non-empty set")


def support_function(s, d):
    """``h(s, d) = sup {d^T y : y in s}``."""
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size != s.dim:
        raise DimensionMismatchError("direction has wrong dimension")
    if isinstance(s, Ellipsoid):
        return float(np.sqrt(d @ s.P @ d))
    if isinstance(s, HPolytope):
        sol = solve_lp(LinearProgram(-d, A_ub=s.Q, b_ub=s.q))
        if sol.status == "infeasible":
            raise EmptySetError("support function of an empty polytope")
        if sol.status == "unbounded":
            return np.inf
        if not sol.ok:
            raise SetError(f"support LP failed: {sol.message}")
        return -sol.fun
    if s.num_constraints == 0:
        return float(d @ s.c + np.abs(s.G.T @ d).sum())
    w = s.G.T @ d
    sol = solve_lp(_alpha_box_lp(s, -w))
    if sol.status == "infeasible":
        raise EmptySetError("support function of an empty constrained zonotope")
    if not sol.ok:
        raise SetError(f"support LP failed: {sol.message}")
    return float(d @ s.c - sol.fun)


def _unique_coefficients(z):
    """Return a solver for ``a`` in ``x - c = G a`` when ``a`` is unique, else None."""
    if "pinv" not in z._cache:
        entry = None
        if z.num_constraints == 0:
            nz = np.flatnonzero(np.linalg.norm(z.G, axis=0) > 0)
            Gn = z.G[:, nz]
            if nz.size == 0 or np.linalg.matrix_rank(Gn) == nz.size:
                entry = (nz, np.linalg.pinv(Gn) if nz.size else np.zeros((0, z.dim)))
        z._cache["pinv"] = entry
    return z._cache["pinv"]


def distance_inf(z, x):
    """``min ||x - y||_inf`` over ``y`` in ``z`` (LP; exact)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n, sigma = z.dim, z.num_generators
    # variables [a (sigma), r]
    A_ub = np.vstack([
        np.hstack([z.G, -np.ones((n, 1))]),
        np.hstack([-z.G, -np.ones((n, 1))]),
    ])
    b_ub = np.concatenate([x - z.c, z.c - x])
    A_eq = np.hstack([z.F, np.zeros((z.num_constraints, 1))]) if z.num_constraints else None
    lb = np.concatenate([-np.ones(sigma), [0.0]])
    ub = np.concatenate([np.ones(sigma), [np.inf]])
    c = np.zeros(sigma + 1)
    c[-1] = 1.0
    sol = solve_lp(LinearProgram(c, A_eq=A_eq, b_eq=z.theta if z.num_constraints else None,
                                 A_ub=A_ub, b_ub=b_ub, lb=lb, ub=ub))
    if sol.status == "infeasible":
        raise EmptySetError("distance to an empty set")
    if not sol.ok:
        raise SetError(f"membership LP failed: {sol.message}")
    return max(0.0, sol.fun)


def contains(z, x, tol=None):
    """Membership test with absolute slack ``tol`` (default: feasibility tolerance)."""
    tol = get_tolerances().feasibility if tol is None else tol
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != z.dim:
        raise DimensionMismatchError("point has wrong dimension")
    fast = _unique_coefficients(z)
    if fast is not None:
        nz, pinv = fast
        alpha = np.clip(pinv @ (x - z.c), -1.0, 1.0)
        resid = x - z.c - z.G[:, nz] @ alpha
        return bool(np.max(np.abs(resid), initial=0.0) <= tol)
    return distance_inf(z, x) <= tol


def _affine_dimension(z):
    if z.num_constraints:
        N = null_space(z.F)
        return np.linalg.matrix_rank(z.G @ N) if N.size else 0
    return np.linalg.matrix_rank(z.G) if z.num_generators else 0


def check_c_set(s):
    """Raise :class:`GaugeDomainError` unless ``s`` is origin-centered with 0 in its interior."""
    if "cset" in s._cache:
        if s._cache["cset"] is not None:
            raise GaugeDomainError(s._cache["cset"])
        return
    msg = None
    tol = get_tolerances().feasibility
    if np.max(np.abs(s.c), initial=0.0) > tol:
        msg = "gauge requires an origin-centered set"
    elif _affine_dimension(s) < s.dim:
        msg = "gauge requires a full-dimensional set (flat set has no interior)"
    else:
        eye = np.eye(s.dim)
        for d in np.vstack([eye, -eye]):
            if support_function(s, d) <= tol:
                msg = "origin is not in the interior of the set"
                break
    s._cache["cset"] = msg
    if msg:
        raise GaugeDomainError(msg)


def gauge(s, x):
    """Minkowski function ``min {t >= 0 : x in t s}`` for a proper C-set ``s``."""
    check_c_set(s)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != s.dim:
        raise DimensionMismatchError("point has wrong dimension")
    if s.num_constraints == 0 and s.num_generators == s.dim:
        if "inv" not in s._cache:
            s._cache["inv"] = np.linalg.inv(s.G)
        return float(np.max(np.abs(s._cache["inv"] @ x), initial=0.0))
    sol = solve_lp(gauge_lp(s, x))
    if not sol.ok:
        raise SetError(f"gauge LP failed: {sol.message}")
    return float(sol.fun)


def gauge_lp(s, x):
    sigma = s.num_generators
    nv = sigma + 1
    c = np.zeros(nv)
    c[-1] = 1.0
    eq_rows = [np.hstack([s.G, np.zeros((s.dim, 1))])]
    eq_rhs = [x]
    if s.num_constraints:
        eq_rows.append(np.hstack([s.F, -s.theta[:, None]]))
        eq_rhs.append(np.zeros(s.num_constraints))
    I = np.eye(sigma)
    A_ub = np.vstack([np.hstack([I, -np.ones((sigma, 1))]), np.hstack([-I, -np.ones((sigma, 1))])])
    lb = np.concatenate([np.full(sigma, -np.inf), [0.0]])
    return LinearProgram(c, A_eq=np.vstack(eq_rows), b_eq=np.concatenate(eq_rhs), A_ub=A_ub,
                         b_ub=np.zeros(2 * sigma), lb=lb)


def chebyshev_alpha(z):
    """A point deep inside ``{|a| <= 1, F a = theta}`` and its box margin."""
    if "cheb" not in z._cache:
        sigma = z.num_generators
        if z.num_constraints == 0:
            z._cache["cheb"] = (np.zeros(sigma), 1.0)
        else:
            # maximize m s.t. -1 + m <= a <= 1 - m, F a = theta
            c = np.zeros(sigma + 1)
            c[-1] = -1.0
            I = np.eye(sigma)
            one = np.ones((sigma, 1))
            A_ub = np.vstack([np.hstack([I, one]), np.hstack([-I, one])])
            sol = solve_lp(LinearProgram(c, A_eq=np.hstack([z.F, np.zeros((z.num_constraints, 1))]),
                                         b_eq=z.theta, A_ub=A_ub, b_ub=np.ones(2 * sigma),
                                         lb=np.concatenate([np.full(sigma, -np.inf), [0.0]]),
                                         ub=np.concatenate([np.full(sigma, np.inf), [1.0]])))
            if not sol.ok:
                raise EmptySetError("constrained zonotope is empty")
            z._cache["cheb"] = (sol.x[:sigma], float(sol.x[-1]))
    return z._cache["cheb"]


def sample_points(z, count, rng, burn_in=20, thin=5):
    """Draw ``count`` members of ``z`` deterministically from ``rng``.

    Plain zonotopes use uniform coefficients on the unit box. With equality
    constraints, a hit-and-run chain runs over the coefficient polytope
    ``{|a| <= 1, F a = theta}`` and is pushed through ``c + G a``.
    """
    if z.num_generators == 0:
        return np.tile(z.c, (count, 1))
    if z.num_constraints == 0:
        alpha = rng.uniform(-1.0, 1.0, size=(count, z.num_generators))
        return z.c + alpha @ z.G.T
    a0, _ = chebyshev_alpha(z)
    N = null_space(z.F)
    if N.shape[1] == 0:
        return np.tile(z.c + z.G @ a0, (count, 1))
    a = a0.copy()
    out = np.empty((count, z.dim))

    def step(a):
        d = N @ rng.standard_normal(N.shape[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            hi = np.where(d > 0, (1 - a) / d, np.where(d < 0, (-1 - a) / d, np.inf))
            lo = np.where(d > 0, (-1 - a) / d, np.where(d < 0, (1 - a) / d, -np.inf))
        t_hi, t_lo = hi.min(), lo.max()
        if not t_hi > t_lo:
            return a
        return np.clip(a + rng.uniform(t_lo, t_hi) * d, -1.0, 1.0)

    for _ in range(burn_in):
        a = step(a)
    for i in range(count):
        for _ in range(thin):
            a = step(a)
        out[i] = z.c + z.G @ a
    return out


def sample_point(z, rng):
    _require_nonempty(z)
    return sample_points(z, 1, rng)[0]


def bounding_box(s):
    """Axis-aligned ``(lower, upper)`` bounds via support functions."""
    eye = np.eye(s.dim)
    upper = np.array([support_function(s, e) for e in eye])
    lower = np.array([-support_function(s, -e) for e in eye])
    return lower, upper


__all__ = [
    "bounding_box",
    "check_c_set",
    "contains",
    "contract",
    "distance_inf",
    "gauge",
    "gauge_lp",
    "is_empty",
    "linear_map",
    "minkowski_sum",
    "sample_point",
    "sample_points",
    "scale",
    "support_function",
]
