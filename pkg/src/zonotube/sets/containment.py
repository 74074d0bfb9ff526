"""Containment certificates between constrained zonotopes.

``Z1 = <c1, G1, F1, th1>`` lies inside ``Z2 = <c2, G2, F2, th2>`` whenever
there are ``Pi``, ``H`` and ``gamma`` with::

    G1 = G2 Pi,   H F1 = F2 Pi,   H th1 = th2 + F2 gamma,
    c2 - c1 = G2 gamma,   |Pi| 1 + |gamma| <= 1.

The condition is sufficient only: an infeasible LP does not prove that
``Z1`` sticks out of ``Z2``.

The same LP is used for gain synthesis, where the inner set depends affinely
on an unknown matrix ``X`` through ``G1 = G1_0 + M X N`` and
``c1 = c1_0 + M X n``. ``X`` and ``Pi`` never multiply, so the problem stays
linear.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from zonotube.config import get_tolerances
from zonotube.errors import DimensionMismatchError, EmptySetError
from zonotube.opt.lp import LinearProgram, solve_lp
from zonotube.sets.ops import is_empty


_L1_SHARE = 0.01


def _scales(outer):
    sg = max(np.max(np.abs(outer.G), initial=0.0), np.max(np.abs(outer.c), initial=0.0), 1e-300)
    sf = max(np.max(np.abs(outer.F), initial=0.0), np.max(np.abs(outer.theta), initial=0.0), 1e-300)
    return sg, sf


@dataclass(frozen=True)
class ContainmentCertificate:
    """Witness ``(Pi, H, gamma)`` for ``inner ⊆ outer``."""

    Pi: np.ndarray
    H: np.ndarray
    gamma: np.ndarray

    def residuals(self, inner, outer):
        """Largest violation of each condition, relative to the outer set's scale.

        Keys: ``generators``, ``constraints``, ``offset``, ``center``, ``mass``.
        """
        sg, sf = _scales(outer)
        Pi, H, g = self.Pi, self.H, self.gamma
        out = {
            "generators": np.max(np.abs(inner.G - outer.G @ Pi), initial=0.0) / sg,
            "constraints": np.max(np.abs(H @ inner.F - outer.F @ Pi), initial=0.0) / sf,
            "offset": np.max(np.abs(H @ inner.theta - outer.theta - outer.F @ g), initial=0.0) / sf,
            "center": np.max(np.abs(outer.c - inner.c - outer.G @ g), initial=0.0) / sg,
            "mass": max(0.0, np.max(np.abs(Pi).sum(axis=1) + np.abs(g), initial=0.0) - 1.0),
        }
        return {k: float(v) for k, v in out.items()}

    def verify(self, inner, outer, tol=None):
        tol = get_tolerances().feasibility if tol is None else tol
        if self.Pi.shape != (outer.num_generators, inner.num_generators):
            return False
        if self.H.shape != (outer.num_constraints, inner.num_constraints):
            return False
        if self.gamma.shape != (outer.num_generators,):
            return False
        return max(self.residuals(inner, outer).values()) <= tol

    def to_dict(self):
        return {"Pi": self.Pi.tolist(), "H": self.H.tolist(), "gamma": self.gamma.tolist()}

    @classmethod
    def from_dict(cls, d):
        Pi = np.asarray(d["Pi"], dtype=float)
        gamma = np.asarray(d["gamma"], dtype=float).reshape(-1)
        Pi = Pi.reshape(gamma.size, -1) if Pi.size else np.zeros((gamma.size, 0))
        H = np.asarray(d["H"], dtype=float)
        if H.ndim != 2:
            H = H.reshape(0, 0) if H.size == 0 else np.atleast_2d(H)
        return cls(Pi, H, gamma)


@dataclass(frozen=True)
class AffineGain:
    """Unknown ``X`` (shape ``shape``) entering the inner set as
    ``G1 = G1_0 + M X N`` and ``c1 = c1_0 + M X n``."""

    M: np.ndarray
    N: np.ndarray
    n: np.ndarray
    shape: tuple


def _cols(block, offset, total):
    block = sp.coo_matrix(block)
    return sp.csr_matrix((block.data, (block.row, block.col + offset)), shape=(block.shape[0], total))


def containment_lp(inner, outer, gain=None, gain_weight=0.0):
    """Assemble the containment LP. Returns ``(LinearProgram, unpack)``.

    ``unpack(x)`` maps an LP solution to ``(X, ContainmentCertificate)``
    (``X`` is None without a gain). Equality blocks are divided by the outer
    set's magnitude so that very large or very small sets condition alike.

    The objective is the certificate mass ``sum|Pi| + sum|gamma|``. With
    ``gain_weight > 0`` it also charges ``gain_weight * max_i sum_j |X_ij|``,
    the largest row l1-norm of the gain, which favours small balanced gains,
    plus a small share of the entry-wise l1-norm so rows below the maximum are
    also kept small.
    """
    if inner.dim != outer.dim:
        raise DimensionMismatchError("containment between sets of different dimensions")
    n = inner.dim
    s1, s2 = inner.num_generators, outer.num_generators
    m1, m2 = inner.num_constraints, outer.num_constraints
    sg, sf = _scales(outer)

    nx = int(np.prod(gain.shape)) if gain is not None else 0
    split_x = gain is not None and gain_weight > 0
    # variable layout: X (or X+, X-, t), Pi+, Pi-, H, gamma+, gamma-
    o_x = 0
    o_pp = o_x + (2 * nx + 1 if split_x else nx)
    o_pm = o_pp + s2 * s1
    o_h = o_pm + s2 * s1
    o_gp = o_h + m2 * m1
    o_gm = o_gp + s2
    nv = o_gm + s2

    I1 = sp.identity(s1, format="csr")
    blocks, rhs = [], []

    def add(parts, b):
        row = sp.csr_matrix((parts[0][1].shape[0], nv))
        for off, mat in parts:
            row = row + _cols(mat, off, nv)
        blocks.append(row)
        rhs.append(b)

    # generators: G2 Pi - M X N = G1_0   (column-major vec)
    kG = sp.kron(I1, sp.csr_matrix(outer.G / sg))
    parts = [(o_pp, kG), (o_pm, -kG)]
    if gain is not None:
        kX = sp.csr_matrix(np.kron(gain.N.T, gain.M) / sg)
        parts.append((o_x, -kX))
        if split_x:
            parts.append((o_x + nx, kX))
    add(parts, inner.G.reshape(-1, order="F") / sg)

    # constraints: H F1 - F2 Pi = 0
    if m2 * s1:
        kF2 = sp.kron(I1, sp.csr_matrix(outer.F / sf))
        parts = [(o_pp, -kF2), (o_pm, kF2)]
        if m1:
            parts.append((o_h, sp.kron(sp.csr_matrix(inner.F.T / sf), sp.identity(m2))))
        add(parts, np.zeros(m2 * s1))

    # offsets: H th1 - F2 gamma = th2
    if m2:
        F2 = sp.csr_matrix(outer.F / sf)
        parts = [(o_gp, -F2), (o_gm, F2)]
        if m1:
            parts.append((o_h, sp.kron(sp.csr_matrix(inner.theta[None, :] / sf), sp.identity(m2))))
        add(parts, outer.theta / sf)

    # centers: G2 gamma + M X n = c2 - c1_0
    G2 = sp.csr_matrix(outer.G / sg)
    parts = [(o_gp, G2), (o_gm, -G2)]
    if gain is not None:
        kC = sp.csr_matrix(np.kron(gain.n[None, :], gain.M) / sg)
        parts.append((o_x, kC))
        if split_x:
            parts.append((o_x + nx, -kC))
    add(parts, (outer.c - inner.c) / sg)

    A_eq = sp.vstack(blocks, format="csr")
    b_eq = np.concatenate(rhs)

    # row mass: sum_j (Pi+ + Pi-)_ij + gamma+_i + gamma-_i <= 1
    ones_row = sp.kron(sp.csr_matrix(np.ones((1, s1))), sp.identity(s2))
    Is2 = sp.identity(s2)
    A_ub = (_cols(ones_row, o_pp, nv) + _cols(ones_row, o_pm, nv)
            + _cols(Is2, o_gp, nv) + _cols(Is2, o_gm, nv)).tocsr()
    b_ub = np.ones(s2)
    if split_x:
        # row l1-norms of X below the epigraph variable t
        rows_x = sp.kron(sp.csr_matrix(np.ones((1, gain.shape[1]))), sp.identity(gain.shape[0]))
        t_col = sp.csr_matrix(-np.ones((gain.shape[0], 1)))
        A_ub = sp.vstack([A_ub, _cols(rows_x, o_x, nv) + _cols(rows_x, o_x + nx, nv) + _cols(t_col, o_x + 2 * nx, nv)],
                         format="csr")
        b_ub = np.concatenate([b_ub, np.zeros(gain.shape[0])])

    c = np.zeros(nv)
    c[o_pp:o_h] = 1.0
    c[o_gp:] = 1.0
    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    lb[o_h:o_gp] = -np.inf
    if gain is not None:
        if split_x:
            c[o_x + 2 * nx] = gain_weight
            c[o_x:o_x + 2 * nx] = _L1_SHARE * gain_weight
        else:
            lb[o_x:o_pp] = -np.inf

    def unpack(x):
        X = None
        if gain is not None:
            xv = x[o_x:o_x + nx]
            if split_x:
                xv = xv - x[o_x + nx:o_x + 2 * nx]
            X = xv.reshape(gain.shape, order="F")
        Pi = (x[o_pp:o_pm] - x[o_pm:o_h]).reshape((s2, s1), order="F")
        H = x[o_h:o_gp].reshape((m2, m1), order="F")
        gamma = x[o_gp:o_gm] - x[o_gm:]
        return X, ContainmentCertificate(Pi, H, gamma)

    lp = LinearProgram(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, lb=lb, ub=ub)
    return lp, unpack


def containment_check(inner, outer, backend="highs"):
    """Certificate for ``inner ⊆ outer``, or None when the LP is infeasible.

    A None result does not prove non-containment.
    """
    if inner.dim != outer.dim:
        raise DimensionMismatchError("containment between sets of different dimensions")
    if is_empty(inner) or is_empty(outer):
        raise EmptySetError("containment check needs non-empty operands")
    lp, unpack = containment_lp(inner, outer)
    sol = solve_lp(lp, backend=backend)
    if not sol.ok:
        return None
    _, cert = unpack(sol.x)
    if not cert.verify(inner, outer):
        return None
    return cert
