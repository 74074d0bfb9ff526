"""Bounded noise sources.

Every sample has the form ``c + G z`` with each coordinate of ``z`` in
``[-1, 1]``, so samples always lie in the zonotope ``<c, G>``. Heavy-tailed
and Gaussian shapes are obtained by rejection: a coordinate is redrawn until
it falls inside ``[-1, 1]``, which keeps the draw's center (the bias ``c``)
intact.
"""

from dataclasses import dataclass

import numpy as np

from zonotube.sets import ConstrainedZonotope

KINDS = ("zero", "laplace", "gaussian")


def _truncated(draw, size, rng, max_rounds=10_000):
    z = draw(size)
    bad = np.abs(z) > 1.0
    rounds = 0
    while np.any(bad):
        z[bad] = draw(int(bad.sum()))
        bad = np.abs(z) > 1.0
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("rejection sampling failed to terminate")
    return z


@dataclass(frozen=True)
class NoiseModel:
    """``c + G z`` with ``z`` truncated Laplace, truncated Gaussian or zero.

    ``scale`` is the Laplace scale ``b`` (or Gaussian standard deviation) of
    each ``z`` coordinate before truncation, in units of the generators. The
    default ``1/sqrt(2)`` gives unit-variance Laplace coordinates.
    """

    kind: str
    center: np.ndarray
    generators: np.ndarray
    scale: float = 1.0 / np.sqrt(2.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        c = np.asarray(self.center, dtype=float).reshape(-1)
        G = np.asarray(self.generators, dtype=float).reshape(c.size, -1)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)
        if self.scale <= 0:
            raise ValueError("noise scale must be positive")

    @classmethod
    def from_set(cls, kind, z, scale=1.0 / np.sqrt(2.0)):
        if z.num_constraints:
            raise ValueError("noise bounding sets must be plain zonotopes")
        return cls(kind, z.c, z.G, scale)

    @property
    def bounding_set(self):
        return ConstrainedZonotope.zonotope(self.center, self.generators)

    @property
    def dim(self):
        return self.center.size

    def sample(self, rng, count=None):
        """One sample (``count=None``) or an array of ``count`` samples."""
        k = 1 if count is None else count
        sigma = self.generators.shape[1]
        if self.kind == "zero":
            out = np.zeros((k, self.dim))
        else:
            size = k * sigma
            if self.kind == "laplace":
                z = _truncated(lambda s: rng.laplace(0.0, self.scale, s), size, rng)
            else:
                z = _truncated(lambda s: rng.normal(0.0, self.scale, s), size, rng)
            out = self.center + z.reshape(k, sigma) @ self.generators.T
        return out[0] if count is None else out
