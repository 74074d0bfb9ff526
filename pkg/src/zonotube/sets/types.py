"""Set representations: constrained zonotopes, H-polytopes, ellipsoids.

All three are immutable values: arrays are copied on construction and marked
read-only, so sets can be shared freely between threads and rollouts.
"""

import numpy as np

from zonotube.config import get_tolerances
from zonotube.errors import DimensionMismatchError, SetError


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _matrix(M, rows, cols, name):
    if M is None:
        return np.zeros((rows, cols))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((rows, cols))
    M = np.atleast_2d(M)
    if M.shape != (rows, cols):
        raise DimensionMismatchError(f"{name} has shape {M.shape}, expected {(rows, cols)}")
    return M


class ConstrainedZonotope:
    """``{c + G a : |a|_inf <= 1, F a = theta}``.

    ``G`` is ``n x sigma`` (``sigma`` may be 0, giving a point) and ``F`` is
    ``n_c x sigma`` (``n_c`` may be 0, giving a plain zonotope).
    """

    __slots__ = ("_c", "_G", "_F", "_theta", "_cache")

    def __init__(self, c, G=None, F=None, theta=None):
        c = np.asarray(c, dtype=float).reshape(-1)
        n = c.size
        if G is None:
            G = np.zeros((n, 0))
        G = np.asarray(G, dtype=float)
        if G.ndim == 1:
            G = G.reshape(n, -1) if G.size else np.zeros((n, 0))
        if G.shape[0] != n:
            raise DimensionMismatchError(f"generators have {G.shape[0]} rows, center has {n} entries")
        sigma = G.shape[1]
        if theta is None:
            theta = np.zeros(0) if F is None else np.zeros(np.atleast_2d(F).shape[0])
        theta = np.asarray(theta, dtype=float).reshape(-1)
        F = _matrix(F, theta.size, sigma, "constraint matrix")
        self._c = _frozen(c)
        self._G = _frozen(G)
        self._F = _frozen(F)
        self._theta = _frozen(theta)
        self._cache = {}

    # construction helpers -------------------------------------------------
    @classmethod
    def box(cls, center, half_widths):
        center = np.asarray(center, dtype=float).reshape(-1)
        h = np.broadcast_to(np.asarray(half_widths, dtype=float), center.shape)
        return cls(center, np.diag(h))

    @classmethod
    def point(cls, c):
        return cls(c)

    @classmethod
    def zonotope(cls, c, G):
        return cls(c, G)

    # accessors -------------------------------------------------------------
    c = property(lambda self: self._c)
    G = property(lambda self: self._G)
    F = property(lambda self: self._F)
    theta = property(lambda self: self._theta)

    @property
    def dim(self):
        return self._c.size

    @property
    def num_generators(self):
        return self._G.shape[1]

    @property
    def num_constraints(self):
        return self._F.shape[0]

    @property
    def is_zonotope(self):
        return self.num_constraints == 0

    def __repr__(self):
        return (f"ConstrainedZonotope(dim={self.dim}, generators={self.num_generators}, "
                f"constraints={self.num_constraints})")

    def __eq__(self, other):
        if not isinstance(other, ConstrainedZonotope):
            return NotImplemented
        return all(a.shape == b.shape and np.array_equal(a, b)
                   for a, b in ((self.c, other.c), (self.G, other.G), (self.F, other.F),
                                (self.theta, other.theta)))

    __hash__ = None

    def __add__(self, other):
        from zonotube.sets.ops import minkowski_sum

        if isinstance(other, ConstrainedZonotope):
            return minkowski_sum(self, other)
        v = np.asarray(other, dtype=float).reshape(-1)
        if v.size != self.dim:
            raise DimensionMismatchError("translation vector has wrong dimension")
        return ConstrainedZonotope(self.c + v, self.G, self.F, self.theta)

    def __rmatmul__(self, M):
        from zonotube.sets.ops import linear_map

        return linear_map(M, self)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return ConstrainedZonotope(scalar * self.c, scalar * self.G, self.F, self.theta)

    __rmul__ = __mul__

    # serialization ---------------------------------------------------------
    def to_dict(self):
        return {
            "center": self.c.tolist(),
            "generators": self.G.tolist(),
            "constraint_matrix": self.F.tolist(),
            "constraint_offset": self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        c = np.asarray(d["center"], dtype=float)
        G = d.get("generators")
        G = np.zeros((c.size, 0)) if G is None or len(G) == 0 else np.asarray(G, dtype=float).reshape(c.size, -1)
        theta = np.asarray(d.get("constraint_offset") or [], dtype=float)
        F = d.get("constraint_matrix")
        F = np.zeros((theta.size, G.shape[1])) if not F else np.asarray(F, dtype=float)
        return cls(c, G, F, theta)


class HPolytope:
    """``{x : Q x <= q}``."""

    __slots__ = ("_Q", "_q")

    def __init__(self, Q, q):
        q = np.asarray(q, dtype=float).reshape(-1)
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = Q.reshape(q.size, -1)
        if Q.shape[0] != q.size:
            raise DimensionMismatchError(f"Q has {Q.shape[0]} rows, q has {q.size} entries")
        self._Q = _frozen(Q)
        self._q = _frozen(q)

    Q = property(lambda self: self._Q)
    q = property(lambda self: self._q)

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        n = lower.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([upper, -lower]))

    @property
    def dim(self):
        return self._Q.shape[1]

    @property
    def num_rows(self):
        return self._q.size

    def contains(self, x, tol=None):
        tol = get_tolerances().probe_slack if tol is None else tol
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.Q @ x <= self.q + tol))

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, rows={self.num_rows})"

    def to_dict(self):
        return {"Q": self.Q.tolist(), "q": self.q.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["Q"], d["q"])


class Ellipsoid:
    """``{x : x^T P^{-1} x <= 1}`` with ``P`` symmetric positive definite."""

    __slots__ = ("_P",)

    def __init__(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        tol = get_tolerances()
        if P.shape[0] != P.shape[1]:
            raise DimensionMismatchError("ellipsoid shape matrix must be square")
        if np.max(np.abs(P - P.T), initial=0.0) > tol.symmetry * max(1.0, np.abs(P).max()):
            raise SetError("ellipsoid shape matrix is not symmetric")
        P = 0.5 * (P + P.T)
        if np.linalg.eigvalsh(P).min() <= 0:
            raise SetError("ellipsoid shape matrix is not positive definite")
        self._P = _frozen(P)

    P = property(lambda self: self._P)

    @property
    def dim(self):
        return self._P.shape[0]

    def contains(self, x, tol=None):
        tol = get_tolerances().probe_slack if tol is None else tol
        x = np.asarray(x, dtype=float)
        return float(x @ np.linalg.solve(self.P, x)) <= 1.0 + tol

    def __repr__(self):
        return f"Ellipsoid(dim={self.dim})"

    def to_dict(self):
        return {"P": self.P.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["P"])


def set_from_dict(d):
    """Rebuild whichever set type ``d`` serializes (dispatch on its keys)."""
    if "center" in d:
        return ConstrainedZonotope.from_dict(d)
    if "Q" in d:
        return HPolytope.from_dict(d)
    if "P" in d:
        return Ellipsoid.from_dict(d)
    raise SetError(f"unrecognized set document with keys {sorted(d)}")
