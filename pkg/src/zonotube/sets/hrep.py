"""Conversions between constrained zonotopes and half-space representations,
plus the polytope operations built on them (polar, Pontryagin difference,
vertex enumeration)."""

import itertools

import numpy as np
from scipy.spatial import ConvexHull

from zonotube.config import get_tolerances
from zonotube.errors import DimensionMismatchError, EmptySetError, ProjectionBudgetError, SetError
from zonotube.opt.lp import LinearProgram, solve_lp
from zonotube.sets.ops import bounding_box, is_empty, support_function
from zonotube.sets.types import ConstrainedZonotope, HPolytope

_ZERO = 1e-11


def _normalize(rows, rhs):
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > _ZERO
    trivial_bad = (~keep) & (rhs < -1e-9)
    if np.any(trivial_bad):
        raise EmptySetError("inconsistent constraint 0 <= negative")
    rows, rhs, norms = rows[keep], rhs[keep], norms[keep]
    return rows / norms[:, None], rhs / norms


def _dedupe(rows, rhs, decimals=10):
    if rows.shape[0] == 0:
        return rows, rhs
    key = np.round(rows, decimals)
    order = np.lexsort(np.column_stack([rhs, key]).T[::-1])
    best = {}
    for i in order:
        k = key[i].tobytes()
        if k not in best or rhs[i] < rhs[best[k]]:
            best[k] = i
    idx = np.array(sorted(best.values()))
    return rows[idx], rhs[idx]


def remove_redundant(rows, rhs, tol=None):
    """Drop inequalities implied by the others (one LP per row)."""
    tol = get_tolerances().feasibility if tol is None else tol
    rows, rhs = _normalize(np.asarray(rows, float), np.asarray(rhs, float))
    rows, rhs = _dedupe(rows, rhs)
    keep = np.ones(rows.shape[0], dtype=bool)
    for i in range(rows.shape[0]):
        mask = keep.copy()
        b = rhs.copy()
        b[i] += 1.0
        sol = solve_lp(LinearProgram(-rows[i], A_ub=rows[mask], b_ub=b[mask]))
        if sol.status == "infeasible":
            raise EmptySetError("polytope is empty")
        if sol.ok and -sol.fun <= rhs[i] + tol:
            keep[i] = False
    return rows[keep], rhs[keep]


def to_hrep(z, budget=None):
    """Exact H-representation of a constrained zonotope.

    Equality rows eliminate coefficients by substitution first; the remaining
    coefficients are projected out by Fourier-Motzkin elimination with LP
    redundancy pruning after every round.
    """
    budget = get_tolerances().projection_budget if budget is None else budget
    if z.num_generators > budget:
        raise ProjectionBudgetError(
            f"{z.num_generators} generators exceed the projection budget of {budget}; "
            "use support-function queries instead")
    if is_empty(z):
        raise EmptySetError("cannot convert an empty set")
    n, sigma = z.dim, z.num_generators
    # each row: [a (sigma) | b (n)] . (alpha, x)  (=|<=)  d
    eq = np.vstack([np.hstack([z.G, -np.eye(n)]), np.hstack([z.F, np.zeros((z.num_constraints, n))])])
    eq_rhs = np.concatenate([-z.c, z.theta])
    ineq = np.vstack([np.hstack([np.eye(sigma), np.zeros((sigma, n))]),
                      np.hstack([-np.eye(sigma), np.zeros((sigma, n))])])
    ineq_rhs = np.ones(2 * sigma)
    alive = list(range(sigma))

    # substitution with the equality rows
    while eq.shape[0]:
        A = np.abs(eq[:, alive]) if alive else np.zeros((eq.shape[0], 0))
        if A.size == 0 or A.max() <= 1e-10:
            break
        r, k = np.unravel_index(np.argmax(A), A.shape)
        j = alive[k]
        pivot, prhs = eq[r], eq_rhs[r]
        eq = np.delete(eq, r, axis=0)
        eq_rhs = np.delete(eq_rhs, r)
        f = eq[:, j] / pivot[j]
        eq = eq - np.outer(f, pivot)
        eq_rhs = eq_rhs - f * prhs
        f = ineq[:, j] / pivot[j]
        ineq = ineq - np.outer(f, pivot)
        ineq_rhs = ineq_rhs - f * prhs
        alive.remove(j)
    # leftover equalities involve x only
    if eq.shape[0]:
        ineq = np.vstack([ineq, eq, -eq])
        ineq_rhs = np.concatenate([ineq_rhs, eq_rhs, -eq_rhs])

    cols = alive + list(range(sigma, sigma + n))
    rows, rhs = ineq[:, cols], ineq_rhs
    n_alpha = len(alive)
    rows, rhs = remove_redundant(rows, rhs)

    while n_alpha:
        # eliminate the coefficient with the smallest pairwise blow-up
        counts = [(np.sum(rows[:, j] > _ZERO) * np.sum(rows[:, j] < -_ZERO), j) for j in range(n_alpha)]
        _, j = min(counts)
        pos = rows[:, j] > _ZERO
        neg = rows[:, j] < -_ZERO
        zero = ~(pos | neg)
        new_rows = [rows[zero]]
        new_rhs = [rhs[zero]]
        for p in np.flatnonzero(pos):
            for q in np.flatnonzero(neg):
                wp, wq = 1.0 / rows[p, j], -1.0 / rows[q, j]
                new_rows.append((wp * rows[p] + wq * rows[q])[None, :])
                new_rhs.append(np.array([wp * rhs[p] + wq * rhs[q]]))
        rows = np.delete(np.vstack(new_rows), j, axis=1)
        rhs = np.concatenate(new_rhs)
        n_alpha -= 1
        if rows.shape[0] == 0:
            break
        rows, rhs = remove_redundant(rows, rhs)

    if rows.shape[0] == 0:
        raise SetError("projection produced an unbounded description")
    order = np.lexsort(np.column_stack([rhs, rows]).T[::-1])
    return HPolytope(rows[order], rhs[order])


def hpolytope_is_empty(p):
    sol = solve_lp(LinearProgram(np.zeros(p.dim), A_ub=p.Q, b_ub=p.q))
    return sol.status == "infeasible"


def hrep_to_czonotope(p):
    """Constrained zonotope with the same points as a bounded, non-empty polytope.

    The polytope is enclosed in its bounding box; every face not already
    implied by the box becomes an equality on an extra slack generator.
    """
    tol = get_tolerances().feasibility
    if hpolytope_is_empty(p):
        raise EmptySetError("polytope is empty")
    lower, upper = bounding_box(p)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise SetError("polytope is unbounded")
    c = 0.5 * (upper + lower)
    r = 0.5 * (upper - lower)
    box_max = p.Q @ c + np.abs(p.Q) @ r
    box_min = p.Q @ c - np.abs(p.Q) @ r
    face = box_max > p.q + tol
    Qf, qf = p.Q[face], p.q[face]
    s_max = qf - box_min[face]
    s_mid, s_rad = 0.5 * s_max, 0.5 * s_max
    n, m = p.dim, int(face.sum())
    G = np.hstack([np.diag(r), np.zeros((n, m))])
    F = np.hstack([Qf * r[None, :], np.diag(s_rad)])
    theta = qf - Qf @ c - s_mid
    return ConstrainedZonotope(c, G, F, theta)


def polar(s):
    """Polar of an origin-centered, full-dimensional plain zonotope.

    ``{x : ||G^T x||_1 <= 1}``, returned with one face per sign pattern
    (antipodal duplicates removed).
    """
    tol = get_tolerances()
    if np.max(np.abs(s.c), initial=0.0) > tol.feasibility:
        raise SetError("polar requires an origin-centered set")
    if s.num_constraints:
        raise SetError("polar is only implemented for plain zonotopes")
    if s.num_generators > tol.polar_budget:
        raise ProjectionBudgetError(f"{s.num_generators} generators exceed the polar budget")
    if np.linalg.matrix_rank(s.G) < s.dim:
        raise SetError("polar of a set without interior is unbounded")
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=s.num_generators)))
    rows = signs @ s.G.T
    rows, rhs = _dedupe(*_normalize(rows, np.ones(rows.shape[0])))
    rows, rhs = remove_redundant(rows, rhs)
    order = np.lexsort(np.column_stack([rhs, rows]).T[::-1])
    return HPolytope(rows[order], rhs[order])


def pontryagin_diff(minuend, subtrahend):
    """``{x : x + subtrahend ⊆ minuend}`` by support-function tightening."""
    if minuend.dim != subtrahend.dim:
        raise DimensionMismatchError("Pontryagin difference of sets with different dimensions")
    if is_empty(subtrahend):
        raise EmptySetError("subtrahend is empty")
    H = minuend if isinstance(minuend, HPolytope) else to_hrep(minuend)
    shrink = np.array([support_function(subtrahend, row) for row in H.Q])
    result = HPolytope(H.Q, H.q - shrink)
    if hpolytope_is_empty(result):
        raise EmptySetError("Pontryagin difference is empty: error/deviation sets too large for the constraints")
    return result


def _hull_vertices(points, decimals=9):
    points = np.unique(np.round(points, decimals), axis=0)
    if points.shape[0] <= 1:
        return points
    center = points.mean(axis=0)
    U, S, Vt = np.linalg.svd(points - center, full_matrices=False)
    rank = int(np.sum(S > 1e-9 * max(1.0, S[0])))
    if rank == 0:
        verts = points[:1]
    elif rank == 1:
        t = (points - center) @ Vt[0]
        verts = points[[int(np.argmin(t)), int(np.argmax(t))]]
    else:
        proj = (points - center) @ Vt[:rank].T
        verts = points[ConvexHull(proj).vertices]
    order = np.lexsort(verts.T[::-1])
    return verts[order]


def _alpha_vertices(z, max_candidates=200_000):
    sigma = z.num_generators
    if sigma == 0:
        return np.zeros((1, 0))
    if z.num_constraints == 0:
        return np.array(list(itertools.product([-1.0, 1.0], repeat=sigma)))
    # independent rows of [F theta]
    F, theta = z.F, z.theta
    U, S, Vt = np.linalg.svd(F)
    r = int(np.sum(S > 1e-10 * max(1.0, S[0]))) if S.size else 0
    if r:
        F_red = np.diag(S[:r]) @ Vt[:r]
        theta_red = U[:, :r].T @ theta
    else:
        F_red, theta_red = np.zeros((0, sigma)), np.zeros(0)
    n_fixed = sigma - r
    total = len(list(itertools.combinations(range(sigma), r))) * 2**n_fixed
    if total > max_candidates:
        raise ProjectionBudgetError("too many vertex candidates for enumeration")
    out = []
    for free in itertools.combinations(range(sigma), r):
        fixed = [j for j in range(sigma) if j not in free]
        Ff = F_red[:, list(free)]
        if r and abs(np.linalg.det(Ff)) < 1e-12:
            continue
        for signs in itertools.product([-1.0, 1.0], repeat=n_fixed):
            a = np.zeros(sigma)
            a[fixed] = signs
            if r:
                a[list(free)] = np.linalg.solve(Ff, theta_red - F_red[:, fixed] @ np.array(signs))
            if np.all(np.abs(a) <= 1 + 1e-9) and np.allclose(F @ a, theta, atol=1e-8):
                out.append(a)
    if not out:
        raise EmptySetError("constrained zonotope is empty")
    return np.array(out)


def enumerate_vertices(s, max_dim=3):
    """Exact vertex list in lexicographic order (test oracle; small sets only)."""
    if s.dim > max_dim:
        raise ProjectionBudgetError(f"vertex enumeration limited to dimension {max_dim}")
    if isinstance(s, HPolytope):
        n = s.dim
        if len(s.q) > 80:
            raise ProjectionBudgetError("too many faces for vertex enumeration")
        pts = []
        for idx in itertools.combinations(range(len(s.q)), n):
            A = s.Q[list(idx)]
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            x = np.linalg.solve(A, s.q[list(idx)])
            if np.all(s.Q @ x <= s.q + 1e-9):
                pts.append(x)
        if not pts:
            raise EmptySetError("polytope is empty or has no vertices")
        return _hull_vertices(np.array(pts))
    alphas = _alpha_vertices(s)
    return _hull_vertices(s.c + alphas @ s.G.T)
