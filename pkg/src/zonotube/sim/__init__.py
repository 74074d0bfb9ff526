"""Simulation harness: noise sources, robot model, rollouts and logs."""

from zonotube.sim.experiments import (
    ControlSetup,
    compute_reported_cost,
    run_control_rollout,
    run_observer_comparison,
    run_robot_experiment,
    sinusoid_input,
)
from zonotube.sim.log import TrajectoryLog, csv_header, read_csv, write_mpc_dump, write_summary
from zonotube.sim.noise import NoiseModel
from zonotube.sim.robot import RobotModel

__all__ = [
    "ControlSetup",
    "NoiseModel",
    "RobotModel",
    "TrajectoryLog",
    "compute_reported_cost",
    "csv_header",
    "read_csv",
    "run_control_rollout",
    "run_observer_comparison",
    "run_robot_experiment",
    "sinusoid_input",
    "write_mpc_dump",
    "write_summary",
]
