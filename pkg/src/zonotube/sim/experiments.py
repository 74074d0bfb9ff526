"""Closed- and open-loop rollouts for the two studies.

* an estimation study: a set-membership observer and a steady-state Kalman
  filter fed identical biased, heavy-tailed measurements;
* a control study: tube MPC with certified gains against a certainty-equivalence
  MPC whose gains come from Riccati/LQR designs, on the same noise draws.
"""

from dataclasses import dataclass

import numpy as np

from zonotube.errors import InfeasibleError
from zonotube.estimation import estimator_update
from zonotube.mpc import MpcConfig, advance_nominal, control_law, solve_mpc
from zonotube.sets import contains, gauge
from zonotube.sim.log import TrajectoryLog
from zonotube.sim.noise import NoiseModel


def sinusoid_input(offset, amplitude, period):
    """``u(k) = offset + amplitude sin(2 pi k / period)`` as a callable."""
    return lambda k: np.atleast_1d(offset + amplitude * np.sin(2 * np.pi * k / period))


def draw_noise(noise, steps, rng):
    return noise.sample(rng, steps)


def run_observer_comparison(spec, L, L_K, x0, xhat0, noise, steps, input_fn, seed):
    """Open-loop rollout observed by two estimators on identical measurements.

    Returns ``(set_membership_log, kalman_log)``; both carry the error
    membership ``x - xhat in Z_e`` for every step.
    """
    rng = np.random.default_rng(seed)
    v = draw_noise(noise, steps, rng)
    w_model = NoiseModel.from_set("laplace", spec.Z_w) if spec.Z_w.num_generators else None
    w = w_model.sample(rng, steps) if w_model is not None else np.tile(spec.Z_w.c, (steps, 1))
    n, m = spec.n, spec.m
    x = np.zeros((steps + 1, n))
    xh = np.zeros((steps + 1, n))
    xk = np.zeros((steps + 1, n))
    u = np.zeros((steps, m))
    x[0], xh[0], xk[0] = x0, xhat0, xhat0
    for k in range(steps):
        u[k] = input_fn(k)
        y = spec.C @ x[k] + v[k]
        xh[k + 1] = estimator_update(xh[k], u[k], y, spec.A, spec.B, spec.C, L)
        xk[k + 1] = estimator_update(xk[k], u[k], y, spec.A, spec.B, spec.C, L_K)
        x[k + 1] = spec.A @ x[k] + spec.B @ u[k] + w[k]
    logs = []
    for label, est in (("set_membership", xh), ("kalman", xk)):
        mem = [contains(spec.Z_e, x[k] - est[k]) for k in range(steps + 1)]
        logs.append(TrajectoryLog(label, x.copy(), est.copy(), u.copy(), v.copy(), w=w.copy(),
                                  memberships={"mem_e": mem}, meta={"seed": int(seed)}))
    return tuple(logs)


def compute_reported_cost(log, Q, R, P):
    """``sum_i g(Q, x(i)) + g(R, u(i)) + g(P, x(N_s))`` on the true states and applied inputs.

    Returns ``(stage costs, terminal cost, total)``.
    """
    stage = np.array([gauge(Q, log.x[i]) + gauge(R, log.u[i]) for i in range(log.steps)])
    terminal = gauge(P, log.x[log.steps])
    return stage, terminal, float(stage.sum() + terminal)


@dataclass
class ControlSetup:
    """Inputs shared by both control variants."""

    spec: object
    cost: object
    horizon: int
    x0: np.ndarray
    xhat0: np.ndarray
    noise: NoiseModel
    steps: int


def mpc_config(setup, gains, tube=True):
    return MpcConfig(setup.spec.A, setup.spec.B, setup.horizon, setup.cost.Q, setup.cost.R, setup.cost.P,
                     gains.S_xbar, gains.S_ubar, gains.Z_f, gains.K,
                     setup.spec.Z_xdev if tube else None)


def run_control_rollout(setup, gains, seed, tube=True, label="tube_mpc", strict=True):
    """Closed loop under the MPC law with observer ``gains.L``.

    With ``tube=True`` the first nominal state is chosen inside the deviation
    tube around the estimate and later steps use the shifted nominal anchor;
    with ``tube=False`` the nominal starts at the estimate. ``strict`` turns a
    tube violation into an error (it signals a broken certificate).
    """
    spec = setup.spec
    rng = np.random.default_rng(seed)
    steps, n, m = setup.steps, spec.n, spec.m
    v = draw_noise(setup.noise, steps, rng)
    w = np.tile(spec.Z_w.c, (steps, 1))
    if spec.Z_w.num_generators:
        w = NoiseModel.from_set("laplace", spec.Z_w).sample(rng, steps)
    cfg = mpc_config(setup, gains, tube)
    x = np.zeros((steps + 1, n))
    xh = np.zeros((steps + 1, n))
    xb = np.zeros((steps + 1, n))
    u = np.zeros((steps, m))
    x[0], xh[0] = setup.x0, setup.xhat0
    mems = {c: [] for c in ("mem_e", "mem_xdev", "mem_x", "mem_u")}
    anchor = None
    solves = []
    for k in range(steps + 1):
        try:
            sol = solve_mpc(cfg, xh[k], anchor, step=k)
        except InfeasibleError as err:
            err.step = k
            raise
        xb[k] = sol.xbar[0]
        solves.append({"k": k, "num_vars": sol.num_vars, "num_rows": sol.num_rows, "status": sol.status,
                       "beta": sol.beta, "t_P": sol.t_P, "objective": sol.objective,
                       "solve_time": sol.solve_time})
        mems["mem_e"].append(contains(spec.Z_e, x[k] - xh[k]))
        mems["mem_xdev"].append(contains(spec.Z_xdev, xh[k] - xb[k]))
        mems["mem_x"].append(contains(spec.S_x, x[k]))
        if strict and tube and not mems["mem_xdev"][-1]:
            raise InfeasibleError("estimate left the deviation tube", reason="tube_violation", step=k)
        if k == steps:
            mems["mem_u"].append(None)
            break
        u[k] = control_law(sol, xh[k], gains.K)
        mems["mem_u"].append(contains(spec.S_u, u[k]))
        y = spec.C @ x[k] + v[k]
        xh[k + 1] = estimator_update(xh[k], u[k], y, spec.A, spec.B, spec.C, gains.L)
        x[k + 1] = spec.A @ x[k] + spec.B @ u[k] + w[k]
        anchor = advance_nominal(sol)
    log = TrajectoryLog(label, x, xh, u, v, xbar=xb, w=w, memberships=mems,
                        meta={"seed": int(seed), "mpc": solves})
    log.stage_cost, log.terminal_cost, _ = compute_reported_cost(log, setup.cost.Q, setup.cost.R, setup.cost.P)
    return log


def run_robot_experiment(variant, setup, perception_gains, baseline_gains, seed):
    """``variant`` is ``"perception_mpc"`` (certified tube) or ``"gaussian_mpc"`` (baseline)."""
    if variant == "perception_mpc":
        return run_control_rollout(setup, perception_gains, seed, tube=True, label=variant)
    if variant == "gaussian_mpc":
        return run_control_rollout(setup, baseline_gains, seed, tube=False, label=variant, strict=False)
    raise ValueError(f"unknown variant {variant!r}")
