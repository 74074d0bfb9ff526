"""Plant description shared by synthesis, estimation and simulation."""

from dataclasses import dataclass, field

import numpy as np

from zonotube.errors import DimensionMismatchError, EmptySetError
from zonotube.sets import ConstrainedZonotope, is_empty


def _mat(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


@dataclass
class PlantSpec:
    """Linear plant ``x+ = A x + B u + w``, ``y = C x + v`` with set-valued data.

    ``Z_e`` and ``Z_xdev`` are the seeds whose invariance the observer and
    tube feedback gains must certify. ``validity`` carries informational
    annotations (e.g. the region where the linear perception model holds).
    The constraint sets and the deviation seed are only needed for control;
    an estimation-only study may leave them as None.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Z_v: ConstrainedZonotope
    Z_e: ConstrainedZonotope
    S_x: ConstrainedZonotope = None
    S_u: ConstrainedZonotope = None
    Z_xdev: ConstrainedZonotope = None
    Z_w: ConstrainedZonotope = None
    validity: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A, self.B, self.C = _mat(self.A, "A"), _mat(self.B, "B"), _mat(self.C, "C")
        n, m, ell = self.n, self.m, self.ell
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.C.shape[1] != n:
            raise DimensionMismatchError("plant matrices have inconsistent shapes")
        if self.Z_w is None:
            self.Z_w = ConstrainedZonotope.point(np.zeros(n))
        for name, s, d in (("S_x", self.S_x, n), ("S_u", self.S_u, m), ("Z_v", self.Z_v, ell),
                           ("Z_e", self.Z_e, n), ("Z_xdev", self.Z_xdev, n), ("Z_w", self.Z_w, n)):
            if s is None:
                continue
            if s.dim != d:
                raise DimensionMismatchError(f"{name} has dimension {s.dim}, expected {d}")
            if is_empty(s):
                raise EmptySetError(f"{name} is empty")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def ell(self):
        return self.C.shape[0]

    def is_controllable(self):
        n = self.n
        blocks = [np.linalg.matrix_power(self.A, k) @ self.B for k in range(n)]
        return bool(np.linalg.matrix_rank(np.hstack(blocks)) == n)

    def is_observable(self):
        n = self.n
        blocks = [self.C @ np.linalg.matrix_power(self.A, k) for k in range(n)]
        return bool(np.linalg.matrix_rank(np.vstack(blocks)) == n)

    def is_detectable(self):
        # PBH test on the unstable modes
        eig = np.linalg.eigvals(self.A)
        for lam in eig[np.abs(eig) >= 1.0]:
            M = np.vstack([lam * np.eye(self.n) - self.A, self.C])
            if np.linalg.matrix_rank(M) < self.n:
                return False
        return True
