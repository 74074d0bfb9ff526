"""Kinematics of a four-wheel omnidirectional robot with state ``[x, y, heading]``."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RobotModel:
    """Discrete-time kinematics ``x+ = x + B u`` with full-state output.

    ``t_s`` is the sampling period [s]; ``L_a`` and ``L_b`` are the half
    wheel-base dimensions [m].
    """

    t_s: float = 0.35
    L_a: float = 0.135
    L_b: float = 0.085

    @property
    def L_ab(self):
        return self.L_a + self.L_b

    @property
    def A(self):
        return np.eye(3)

    @property
    def B(self):
        a = self.t_s * self.L_ab
        t = self.t_s
        return np.array([
            [a, a, a, a],
            [a, -a, a, -a],
            [t, -t, -t, t],
        ])

    @property
    def C(self):
        return np.eye(3)
