"""Observer update, error/deviation set propagation and the Kalman baseline."""

from dataclasses import dataclass

import numpy as np

from zonotube.errors import DimensionMismatchError, InfeasibleError
from zonotube.sets import ConstrainedZonotope, linear_map, minkowski_sum


@dataclass(frozen=True)
class ObserverState:
    """Estimate ``xhat`` at step ``k`` together with the current error set."""

    xhat: np.ndarray
    error_set: ConstrainedZonotope
    k: int = 0


def _vec(v, size, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != size:
        raise DimensionMismatchError(f"{name} has size {v.size}, expected {size}")
    return v


def estimator_update(xhat, u, y, A, B, C, L):
    """``A xhat + B u + L (y - C xhat)``."""
    xhat = _vec(xhat, A.shape[0], "estimate")
    u = _vec(u, B.shape[1], "input")
    y = _vec(y, C.shape[0], "measurement")
    return A @ xhat + B @ u + L @ (y - C @ xhat)


def observer_step(obs, u, y, plant, L):
    """Advance the estimate and its error set by one step."""
    xhat = estimator_update(obs.xhat, u, y, plant.A, plant.B, plant.C, L)
    err = propagate_error_set(obs.error_set, L, plant)
    return ObserverState(xhat, err, obs.k + 1)


def propagate_error_set(Z_e, L, plant):
    """One-step image of the estimation error set under ``e+ = (A - LC) e - L v + w``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape != (plant.n, plant.ell):
        raise DimensionMismatchError(f"observer gain must be {plant.n}x{plant.ell}")
    return minkowski_sum(minkowski_sum(linear_map(plant.A - L @ plant.C, Z_e), linear_map(-L, plant.Z_v)),
                         plant.Z_w)


def propagate_deviation_set(Z_xdev, K, L, Z_e, plant):
    """One-step image of the deviation set under ``x~+ = (A + BK) x~ + L C e + L v``."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if K.shape != (plant.m, plant.n):
        raise DimensionMismatchError(f"feedback gain must be {plant.m}x{plant.n}")
    if L.shape != (plant.n, plant.ell):
        raise DimensionMismatchError(f"observer gain must be {plant.n}x{plant.ell}")
    return minkowski_sum(minkowski_sum(linear_map(plant.A + plant.B @ K, Z_xdev), linear_map(L @ plant.C, Z_e)),
                         linear_map(L, plant.Z_v))


@dataclass(frozen=True)
class KalmanBaseline:
    """Steady-state predictor-form Kalman gain and its Riccati solution."""

    gain: np.ndarray
    Q_cov: np.ndarray
    R_cov: np.ndarray
    P: np.ndarray
    iterations: int
    residual: float

    @property
    def converged(self):
        return self.residual <= 1e-9


def kalman_gain(A, C, Q_cov, R_cov, tol=1e-12, max_iter=100_000):
    """Iterate the prediction Riccati recursion to a fixed point.

    ``P+ = A P A^T + Q - A P C^T (C P C^T + R)^{-1} C P A^T`` and the returned
    gain is ``A P C^T (C P C^T + R)^{-1}``, matching an estimator of the form
    ``xhat+ = A xhat + B u + L (y - C xhat)``.
    """
    A, C = np.atleast_2d(A).astype(float), np.atleast_2d(C).astype(float)
    Q_cov, R_cov = np.atleast_2d(Q_cov).astype(float), np.atleast_2d(R_cov).astype(float)
    P = Q_cov.copy()
    for it in range(1, max_iter + 1):
        S = C @ P @ C.T + R_cov
        G = A @ P @ C.T @ np.linalg.inv(S)
        P_next = A @ P @ A.T + Q_cov - G @ S @ G.T
        P_next = 0.5 * (P_next + P_next.T)
        step = np.max(np.abs(P_next - P))
        P = P_next
        if not np.all(np.isfinite(P)) or np.max(np.abs(P)) > 1e12:
            raise InfeasibleError("Riccati recursion diverged; (A, C) not detectable", reason="kalman_divergence")
        if step <= tol * max(1.0, np.max(np.abs(P))):
            break
    else:
        raise InfeasibleError("Riccati recursion did not converge", reason="kalman_divergence")
    S = C @ P @ C.T + R_cov
    L = A @ P @ C.T @ np.linalg.inv(S)
    resid = float(np.max(np.abs(A @ P @ A.T + Q_cov - L @ S @ L.T - P)))
    return KalmanBaseline(L, Q_cov, R_cov, P, it, resid)


def kalman_step(xhat, u, y, plant, L_K):
    return estimator_update(xhat, u, y, plant.A, plant.B, plant.C, L_K)
