import numpy as np

from zonotube import plotting
from zonotube.sets import ConstrainedZonotope
from zonotube.sim import TrajectoryLog


def _log(label="demo"):
    r = np.random.default_rng(3)
    x = np.cumsum(r.normal(size=(11, 3)), axis=0)
    return TrajectoryLog(label, x, x + 0.1 * r.normal(size=x.shape), r.uniform(-1, 1, size=(10, 2)),
                         np.zeros((10, 3)), xbar=x.copy())


def test_projected_outline_of_box():
    s = ConstrainedZonotope.box([1.0, 0.0, 5.0], [1.0, 2.0, 3.0])
    V = plotting.projected_outline(s, (0, 1))
    assert V.shape == (4, 2)
    np.testing.assert_allclose(sorted(map(tuple, V)), [(0, -2), (0, 2), (2, -2), (2, 2)], atol=1e-9)
    # counter-clockwise order gives a positive signed area
    area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
    assert area > 0
    assert abs(area - 8.0) < 1e-9


def test_figures_are_written_and_deterministic(tmp_path):
    log = _log()
    tube = ConstrainedZonotope.box([0.0, 0.0, 0.0], [0.3, 0.3, 0.0])
    paths = [
        plotting.plot_trajectory(log, tmp_path / "a_traj.svg", tube=tube),
        plotting.plot_states(log, tmp_path / "a_states.svg"),
        plotting.plot_inputs(log, tmp_path / "a_inputs.svg", bounds=([-1, -1], [1, 1])),
        plotting.plot_error_comparison([log, _log("other")], tmp_path / "a_err.svg"),
    ]
    first = [open(p, "rb").read() for p in paths]
    for blob in first:
        assert blob.lstrip().startswith(b"<?xml") and b"<svg" in blob
    again = [
        plotting.plot_trajectory(log, tmp_path / "b_traj.svg", tube=tube),
        plotting.plot_states(log, tmp_path / "b_states.svg"),
        plotting.plot_inputs(log, tmp_path / "b_inputs.svg", bounds=([-1, -1], [1, 1])),
        plotting.plot_error_comparison([log, _log("other")], tmp_path / "b_err.svg"),
    ]
    assert first == [open(p, "rb").read() for p in again]


def test_tube_set_needs_deviation_seed(robot_cfg, observer_cfg):
    assert plotting.tube_set(observer_cfg.spec) is None
    assert plotting.tube_set(robot_cfg.spec).dim == 3
