import numpy as np
import pytest
from scipy.optimize import minimize

from zonotube.errors import InfeasibleError
from zonotube.model import PlantSpec
from zonotube.opt import MaxVolEllipsoidProblem, check_lmis, solve_maxvol_ellipsoid
from zonotube.sets import ConstrainedZonotope, Ellipsoid, contract, scale, support_function
from zonotube.synthesis import (
    CostSets,
    SynthesizedGains,
    compute_terminal_set,
    inscribed_margin,
    inscribed_zonotope,
    lqr_gain,
    scale_terminal_cost,
    search_contraction,
    synthesize,
    synthesize_baseline,
    synthesize_feedback_gain,
    synthesize_observer_gain,
    synthesize_terminal_gain,
    tighten_constraints,
    verify_feedback_gain,
    verify_gains,
    verify_observer_gain,
    verify_terminal_gain,
)

box = ConstrainedZonotope.box


# -- maximum-volume ellipsoid -----------------------------------------------------

def test_maxvol_box_closed_form():
    # inactive contraction: the largest ellipsoid in a box has the box half-widths as semi-axes
    Q_x = np.vstack([np.eye(2), -np.eye(2)])
    q_x = np.array([1.0, 2.0, 1.0, 2.0])
    prob = MaxVolEllipsoidProblem(0.5 * np.eye(2), Q_x, q_x, [[1.0], [-1.0]], [1.0, 1.0], np.zeros((1, 2)), 0.95)
    E = solve_maxvol_ellipsoid(prob)
    np.testing.assert_allclose(E.P, np.diag([1.0, 4.0]), atol=1e-6)
    assert check_lmis(E, prob).passed


def _logdet_oracle(prob):
    """Independent route: SLSQP over a Cholesky factor with eigenvalue constraints."""
    n = prob.dim
    rows, bounds = prob.halfspace_rows()
    idx = np.tril_indices(n)

    def P_of(v):
        Lc = np.zeros((n, n))
        Lc[idx] = v
        return Lc @ Lc.T

    def cons(v):
        P = P_of(v)
        S = prob.lam_f * P - prob.A_f @ P @ prob.A_f.T
        quad = np.einsum("ij,jk,ik->i", rows, P, rows)
        return np.concatenate([np.linalg.eigvalsh(S), bounds**2 - quad])

    v0 = np.eye(n)[idx] * 0.05
    res = minimize(lambda v: -np.linalg.slogdet(P_of(v) + 1e-300 * np.eye(n))[1], v0,
                   constraints=[{"type": "ineq", "fun": cons}], method="SLSQP",
                   options={"maxiter": 500, "ftol": 1e-12})
    return -res.fun


def test_maxvol_matches_independent_optimizer():
    A_f = np.array([[0.9, 0.3], [-0.2, 0.7]])
    Q_x = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    q_x = np.array([1.0, 1.0, 1.0, 1.0, 1.2])
    K_f = np.array([[-0.3, -0.4]])
    prob = MaxVolEllipsoidProblem(A_f, Q_x, q_x, [[1.0], [-1.0]], [0.3, 0.3], K_f, 0.95)
    E = solve_maxvol_ellipsoid(prob)
    rep = check_lmis(E, prob)
    assert rep.passed
    assert np.linalg.slogdet(E.P)[1] == pytest.approx(_logdet_oracle(prob), abs=1e-4)


def test_maxvol_rejects_non_contractive_closed_loop():
    prob = MaxVolEllipsoidProblem([[1.0]], [[1.0], [-1.0]], [1.0, 1.0], [[1.0], [-1.0]], [1.0, 1.0], [[0.0]], 0.9)
    with pytest.raises(InfeasibleError) as info:
        solve_maxvol_ellipsoid(prob)
    assert info.value.reason == "terminal_set_infeasible"


def test_inscribed_zonotope_inside_ellipsoid(rng):
    M = rng.normal(size=(3, 3))
    P = M @ M.T + 0.1 * np.eye(3)
    Z = inscribed_zonotope(P)
    assert inscribed_margin(Z, P) >= -1e-12
    for d in rng.normal(size=(50, 3)):
        assert support_function(Z, d) <= np.sqrt(d @ P @ d) + 1e-12


# -- LQR --------------------------------------------------------------------------

def test_lqr_matches_riccati_iteration():
    A = np.array([[1.0, 0.1], [0.0, 1.0]])
    B = np.array([[0.0], [0.1]])
    Q, R = np.eye(2), np.array([[0.5]])
    X = Q.copy()
    for _ in range(20000):
        X = A.T @ X @ A - A.T @ X @ B @ np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A) + Q
    K = -np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A)
    np.testing.assert_allclose(lqr_gain(A, B, Q, R), K, rtol=1e-8)


# -- gains on the robot plant -----------------------------------------------------

@pytest.fixture(scope="module")
def robot(robot_cfg):
    return robot_cfg.spec, robot_cfg.cost


def test_observer_gain_is_certified(robot):
    spec, _ = robot
    L, cert = synthesize_observer_gain(spec, 0.85, gain_weight=100.0)
    assert verify_observer_gain(spec, L, 0.85) is not None
    # the heading channel is measured exactly and needs no correction
    np.testing.assert_allclose(L[2], 0.0, atol=1e-12)
    np.testing.assert_allclose(L[:, 2], 0.0, atol=1e-12)


def test_observer_infeasible_reason():
    spec = PlantSpec([[1.0]], [[1.0]], [[1.0]], Z_v=box([0.0], [100.0]), Z_e=box([0.0], [1.0]))
    with pytest.raises(InfeasibleError) as info:
        synthesize_observer_gain(spec, 0.01)
    assert info.value.reason == "observer_infeasible"


def test_feedback_gain_and_tightening(robot):
    spec, _ = robot
    L, _ = synthesize_observer_gain(spec, 0.85, gain_weight=100.0)
    K, cert = synthesize_feedback_gain(spec, L, 0.9, gain_weight=100.0)
    assert verify_feedback_gain(spec, K, L, 0.9) is not None
    S_xbar, S_ubar = tighten_constraints(spec, K)
    # box constraints shrink by the support of Z_e + Z_xdev along each face
    hi = np.array([support_function(S_xbar, e) for e in np.eye(3)])
    np.testing.assert_allclose(hi, [0.7, 0.7, 1.0], atol=1e-9)
    assert np.all(S_ubar.q > 0)


def test_tightening_empty_reason(robot):
    spec, _ = robot
    with pytest.raises(InfeasibleError) as info:
        tighten_constraints(spec, 10.0 * np.ones((4, 3)))
    assert info.value.reason == "input_tightening_empty"


def test_terminal_gain_certified_and_scaling(robot):
    spec, cost = robot
    K_f, cert = synthesize_terminal_gain(cost, spec.A, spec.B)
    assert verify_terminal_gain(cost, spec.A, spec.B, K_f) is not None
    scaled, rho = scale_terminal_cost(cost, spec.A, spec.B, K_f, rel_tol=1e-2)
    assert rho >= 1.0
    assert verify_terminal_gain(scaled, spec.A, spec.B, K_f) is not None
    # bisection stops within tolerance of the first uncertified scale
    assert verify_terminal_gain(cost.with_P(scale(cost.P, rho * 1.05)), spec.A, spec.B, K_f) is None
    # halving the maximal set is undone by a factor of two
    halved = scaled.with_P(scale(scaled.P, 0.5))
    _, rho2 = scale_terminal_cost(halved, spec.A, spec.B, K_f, rel_tol=1e-3)
    assert rho2 == pytest.approx(2.0, rel=1e-2)


def test_terminal_candidate_rejected(robot):
    spec, cost = robot
    with pytest.raises(InfeasibleError) as info:
        synthesize_terminal_gain(cost, spec.A, spec.B, np.zeros((4, 3)))
    assert info.value.reason == "terminal_infeasible"


def test_search_contraction_brackets_feasibility():
    spec = PlantSpec([[0.5]], [[1.0]], [[1.0]], Z_v=box([0.0], [0.1]), Z_e=box([0.0], [1.0]))
    lam, L, cert = search_contraction(spec, "observer", tol=1e-4)
    assert verify_observer_gain(spec, L, lam) is not None
    # with L = a the error map is -a v, so the best ratio is 0.1 (|L| * 0.1 <= lam and |a - L| <= lam - ...)
    with pytest.raises(InfeasibleError):
        synthesize_observer_gain(spec, lam - 2e-4)


def test_full_chain_and_round_trip(robot, robot_gains_doc):
    spec, cost = robot
    g = SynthesizedGains.from_dict(robot_gains_doc["perception"])
    report = verify_gains(spec, cost, g)
    assert all(report.values()), report
    g2 = SynthesizedGains.from_dict(g.to_dict())
    np.testing.assert_array_equal(g2.K_f, g.K_f)
    np.testing.assert_array_equal(g2.P.P, g.P.P)


def test_synthesize_certifies_supplied_gains(robot, robot_gains_doc):
    spec, cost = robot
    ref = SynthesizedGains.from_dict(robot_gains_doc["perception"])
    g = synthesize(spec, cost, 0.85, 0.9, 0.95, L=ref.L, K=ref.K, K_f=ref.K_f)
    np.testing.assert_array_equal(g.L, ref.L)
    np.testing.assert_array_equal(g.K, ref.K)
    np.testing.assert_allclose(g.P.P, ref.P.P, atol=1e-12)
    with pytest.raises(InfeasibleError) as info:
        synthesize(spec, cost, 0.85, 0.9, 0.95, L=np.zeros((3, 3)))
    assert info.value.reason == "observer_infeasible"


def test_reference_feedback_gain_empties_input_set(robot):
    # the reference K is certified but K Z_xdev does not fit in the unit input box
    spec, _ = robot
    K = 3.2468 * np.array([[-1, -1, 0], [-1, 1, 0], [-1, -1, 0], [-1, 1, 0]], dtype=float)
    assert 2 * 0.2 * 3.2468 > 1.0
    with pytest.raises(InfeasibleError) as info:
        tighten_constraints(spec, K)
    assert info.value.reason == "input_tightening_empty"


def test_compute_terminal_set_respects_constraints(robot, robot_gains_doc):
    spec, _ = robot
    g = SynthesizedGains.from_dict(robot_gains_doc["perception"])
    P, Z_f = compute_terminal_set(spec.A, spec.B, g.K_f, g.S_xbar, g.S_ubar, 0.95)
    A_f = spec.A + spec.B @ g.K_f
    assert np.linalg.eigvalsh(0.95 * P.P - A_f @ P.P @ A_f.T).min() >= -1e-10
    for row, b in zip(g.S_xbar.Q, g.S_xbar.q):
        assert np.sqrt(row @ P.P @ row) <= b + 1e-9


def test_baseline_gains(robot):
    spec, _ = robot
    b = synthesize_baseline(spec, 100 * np.eye(3), 0.1 * np.eye(3), 100 * np.eye(3), 0.1 * np.eye(4), 0.95)
    np.testing.assert_array_equal(b.K, b.K_f)
    assert b.certificates == {}
    assert np.max(np.abs(np.linalg.eigvals(spec.A + spec.B @ b.K))) < 1.0
    assert np.max(np.abs(np.linalg.eigvals(spec.A - b.L @ spec.C))) < 1.0


def test_cost_sets_require_c_sets():
    with pytest.raises(ValueError):
        CostSets(box([1.0], [1.0]), box([0.0], [1.0]), box([0.0], [1.0]))
    c = CostSets(box([0.0, 0.0], [2.0, 2.0]), box([0.0], [1.0]), box([0.0, 0.0], [1.0, 1.0]))
    # polar of a box with half-width 2 is the cross-polytope of radius 1/2
    assert support_function(c.polar("Q"), [1.0, 0.0]) == pytest.approx(0.5)
    assert isinstance(Ellipsoid(np.eye(2)), Ellipsoid)
    assert contract(c.Q, 0.5).G[0, 0] == 1.0
