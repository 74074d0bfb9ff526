"""Offline design: observer, tube feedback and terminal gains, terminal set and
tightened constraints.

Each gain is the solution of one containment LP in which the unknown gain
enters the inner set affinely (see :mod:`zonotube.sets.containment`). Every
returned gain ships with a certificate that is re-checked against the exact
propagated and contracted sets.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_discrete_are, sqrtm

from zonotube.config import get_tolerances
from zonotube.errors import EmptySetError, InfeasibleError
from zonotube.estimation import kalman_gain, propagate_deviation_set, propagate_error_set
from zonotube.model import PlantSpec
from zonotube.opt import MaxVolEllipsoidProblem, check_lmis, solve_lp, solve_maxvol_ellipsoid
from zonotube.sets import (
    AffineGain,
    ConstrainedZonotope,
    ContainmentCertificate,
    Ellipsoid,
    HPolytope,
    check_c_set,
    containment_check,
    containment_lp,
    contract,
    hrep_to_czonotope,
    linear_map,
    minkowski_sum,
    polar,
    pontryagin_diff,
    scale,
    to_hrep,
    support_function,
)

__all__ = [
    "CostSets",
    "PlantSpec",
    "SynthesizedGains",
    "compute_terminal_set",
    "inscribed_margin",
    "inscribed_zonotope",
    "lqr_gain",
    "observer_containment",
    "feedback_containment",
    "terminal_containment",
    "scale_terminal_cost",
    "search_contraction",
    "synthesize",
    "synthesize_baseline",
    "synthesize_feedback_gain",
    "synthesize_observer_gain",
    "synthesize_terminal_gain",
    "tighten_constraints",
    "verify_feedback_gain",
    "verify_gains",
    "verify_observer_gain",
    "verify_terminal_gain",
]


@dataclass
class CostSets:
    """Origin-centered zonotopes whose gauges define stage and terminal costs."""

    Q: ConstrainedZonotope
    R: ConstrainedZonotope
    P: ConstrainedZonotope
    _polars: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for s in (self.Q, self.R, self.P):
            check_c_set(s)
        if self.Q.dim != self.P.dim:
            raise ValueError("Q and P sets must share the state dimension")

    def polar(self, name):
        """Polar of ``Q``, ``R`` or ``P`` as a constrained zonotope (cached)."""
        if name not in self._polars:
            self._polars[name] = hrep_to_czonotope(polar(getattr(self, name)))
        return self._polars[name]

    def with_P(self, P):
        return CostSets(self.Q, self.R, P)


@dataclass
class SynthesizedGains:
    L: np.ndarray
    K: np.ndarray
    K_f: np.ndarray
    lam_L: float
    lam_xdev: float
    lam_f: float
    P: Ellipsoid
    Z_f: ConstrainedZonotope
    S_xbar: HPolytope
    S_ubar: HPolytope
    certificates: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "L": self.L.tolist(),
            "K": self.K.tolist(),
            "K_f": self.K_f.tolist(),
            "lam_L": self.lam_L,
            "lam_xdev": self.lam_xdev,
            "lam_f": self.lam_f,
            "P": self.P.to_dict(),
            "Z_f": self.Z_f.to_dict(),
            "S_xbar": self.S_xbar.to_dict(),
            "S_ubar": self.S_ubar.to_dict(),
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            L=np.atleast_2d(np.asarray(d["L"], dtype=float)),
            K=np.atleast_2d(np.asarray(d["K"], dtype=float)),
            K_f=np.atleast_2d(np.asarray(d["K_f"], dtype=float)),
            lam_L=None if d["lam_L"] is None else float(d["lam_L"]),
            lam_xdev=None if d["lam_xdev"] is None else float(d["lam_xdev"]),
            lam_f=float(d["lam_f"]),
            P=Ellipsoid.from_dict(d["P"]),
            Z_f=ConstrainedZonotope.from_dict(d["Z_f"]),
            S_xbar=HPolytope.from_dict(d["S_xbar"]),
            S_ubar=HPolytope.from_dict(d["S_ubar"]),
            certificates={k: ContainmentCertificate.from_dict(v) for k, v in d.get("certificates", {}).items()},
        )


# -- containment pairs -----------------------------------------------------------

def observer_containment(spec, L, lam):
    """``(propagated error seed, contracted error seed)`` for gain ``L``."""
    return propagate_error_set(spec.Z_e, L, spec), contract(spec.Z_e, lam)


def feedback_containment(spec, K, L, lam):
    return propagate_deviation_set(spec.Z_xdev, K, L, spec.Z_e, spec), contract(spec.Z_xdev, lam)


def terminal_containment(cost, A, B, K_f):
    """``(A_f^T P* ⊕ Q* ⊕ K_f^T R*, P*)`` with ``A_f = A + B K_f``."""
    Ps, Qs, Rs = cost.polar("P"), cost.polar("Q"), cost.polar("R")
    A_f = A + B @ K_f
    inner = minkowski_sum(minkowski_sum(linear_map(A_f.T, Ps), Qs), linear_map(K_f.T, Rs))
    return inner, Ps


def _certify(inner, outer, cert, what):
    if cert is not None and cert.verify(inner, outer):
        return cert
    cert = containment_check(inner, outer)
    if cert is None:
        raise InfeasibleError(f"{what}: certificate failed to re-verify", reason=f"{what}_infeasible")
    return cert


def _solve_gain(base, outer, gain, weight, what, hint):
    lp, unpack = containment_lp(base, outer, gain, weight)
    sol = solve_lp(lp)
    if not sol.ok:
        raise InfeasibleError(f"{what} synthesis LP is {sol.status}; {hint}", reason=f"{what}_infeasible")
    X, cert = unpack(sol.x)
    # round-off below the LP tolerance carries no information; keep gains clean
    X = np.where(np.abs(X) < 1e-12, 0.0, X)
    return X, cert


# -- gain synthesis --------------------------------------------------------------

def synthesize_observer_gain(spec, lam, gain_weight=0.0):
    """Observer gain ``L`` making the error seed ``lam``-contractive.

    Returns ``(L, certificate)``. ``gain_weight > 0`` adds a penalty on the
    largest row l1-norm of ``L`` to the certificate-mass objective, which
    selects small gains (see :func:`zonotube.sets.containment_lp`).
    """
    Z_e, Z_v, Z_w = spec.Z_e, spec.Z_v, spec.Z_w
    zeros = np.zeros((spec.n, spec.ell))
    base = propagate_error_set(Z_e, zeros, spec)
    N = np.hstack([-spec.C @ Z_e.G, -Z_v.G, np.zeros((spec.ell, Z_w.num_generators))])
    gain = AffineGain(np.eye(spec.n), N, -spec.C @ Z_e.c - Z_v.c, (spec.n, spec.ell))
    L, cert = _solve_gain(base, contract(Z_e, lam), gain, gain_weight, "observer",
                          "raise lam_L or enlarge the error seed")
    return L, _certify(*observer_containment(spec, L, lam), cert, "observer")


def synthesize_feedback_gain(spec, L, lam, gain_weight=0.0):
    """Tube feedback ``K`` making the deviation seed ``lam``-contractive for observer ``L``."""
    Z_x, Z_e = spec.Z_xdev, spec.Z_e
    base = propagate_deviation_set(Z_x, np.zeros((spec.m, spec.n)), L, Z_e, spec)
    N = np.hstack([Z_x.G, np.zeros((spec.n, Z_e.num_generators + spec.Z_v.num_generators))])
    gain = AffineGain(spec.B, N, Z_x.c, (spec.m, spec.n))
    K, cert = _solve_gain(base, contract(Z_x, lam), gain, gain_weight, "feedback",
                          "raise lam_xdev or enlarge the deviation seed")
    return K, _certify(*feedback_containment(spec, K, L, lam), cert, "feedback")


def verify_observer_gain(spec, L, lam):
    """Certificate for a given ``L`` (None if the LP is infeasible)."""
    return containment_check(*observer_containment(spec, np.atleast_2d(L), lam))


def verify_feedback_gain(spec, K, L, lam):
    return containment_check(*feedback_containment(spec, np.atleast_2d(K), np.atleast_2d(L), lam))


def verify_terminal_gain(cost, A, B, K_f):
    return containment_check(*terminal_containment(cost, A, B, np.atleast_2d(K_f)))


def lqr_gain(A, B, Q, R):
    """Infinite-horizon discrete LQR gain ``K`` for ``u = K x``."""
    X = solve_discrete_are(A, B, Q, R)
    return -np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A)


def _quadratic_weight(s):
    """Quadratic weight whose unit ellipsoid matches the spread of a zonotope."""
    return np.linalg.inv(s.G @ s.G.T)


def synthesize_terminal_gain(cost, A, B, K_f_candidate=None, gain_weight=0.0):
    """Terminal gain ``K_f`` such that ``g(P, .)`` is a Lyapunov bound for the stage gauges.

    With a candidate, the candidate is certified as is. Without one, the LQR
    gain for quadratic weights matched to the ``Q`` and ``R`` sets is tried
    first; if it cannot be certified the joint LP in ``K_f`` is solved.
    Returns ``(K_f, certificate)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    hint = "shrink the P set (see scale_terminal_cost) or choose another K_f"
    if K_f_candidate is not None:
        K_f = np.atleast_2d(np.asarray(K_f_candidate, dtype=float))
        cert = verify_terminal_gain(cost, A, B, K_f)
        if cert is None:
            raise InfeasibleError(f"terminal gain candidate not certified; {hint}", reason="terminal_infeasible")
        return K_f, cert
    try:
        seed = lqr_gain(A, B, _quadratic_weight(cost.Q), _quadratic_weight(cost.R))
    except (np.linalg.LinAlgError, ValueError):
        seed = None
    if seed is not None:
        cert = verify_terminal_gain(cost, A, B, seed)
        if cert is not None:
            return seed, cert
    n, m = B.shape
    Ps, Qs, Rs = cost.polar("P"), cost.polar("Q"), cost.polar("R")
    base = minkowski_sum(minkowski_sum(linear_map(A.T, Ps), Qs), linear_map(np.zeros((n, m)), Rs))
    N = np.hstack([B.T @ Ps.G, np.zeros((m, Qs.num_generators)), Rs.G])
    gain = AffineGain(np.eye(n), N, B.T @ Ps.c + Rs.c, (n, m))
    Kt, cert = _solve_gain(base, Ps, gain, gain_weight, "terminal", hint)
    K_f = Kt.T
    return K_f, _certify(*terminal_containment(cost, A, B, K_f), cert, "terminal")


def scale_terminal_cost(cost, A, B, K_f, rel_tol=1e-3, rho_max=1e12):
    """Largest ``rho >= 1`` such that ``K_f`` stays certified with ``P`` replaced by ``rho P``.

    Returns ``(scaled CostSets, rho)``. Enlarging ``P`` lowers the terminal
    gauge, so certification is monotone in ``rho`` and bisection applies.
    """
    def ok(rho):
        return verify_terminal_gain(cost.with_P(scale(cost.P, rho)), A, B, K_f) is not None

    if not ok(1.0):
        raise InfeasibleError("terminal gain is not certified for the initial P set", reason="terminal_infeasible")
    lo, hi = 1.0, 2.0
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > rho_max:
            return cost.with_P(scale(cost.P, lo)), lo
    while (hi - lo) > rel_tol * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return cost.with_P(scale(cost.P, lo)), lo


# -- terminal set and tightening -------------------------------------------------

def inscribed_zonotope(P):
    """``<0, n^{-1/2} P^{1/2}>``, a zonotope inside the ellipsoid ``P``."""
    P = P.P if isinstance(P, Ellipsoid) else np.asarray(P, dtype=float)
    n = P.shape[0]
    root = np.real(sqrtm(P))
    root = 0.5 * (root + root.T)
    return ConstrainedZonotope.zonotope(np.zeros(n), root / np.sqrt(n))


def inscribed_margin(Z_f, P):
    """``1 - max over hypercube vertices of a^T G^T P^{-1} G a`` (>= 0 means inscribed)."""
    P = P.P if isinstance(P, Ellipsoid) else np.asarray(P, dtype=float)
    M = Z_f.G.T @ np.linalg.solve(P, Z_f.G)
    worst = max(float(np.array(a) @ M @ np.array(a))
                for a in itertools.product([-1.0, 1.0], repeat=Z_f.num_generators))
    return 1.0 - worst


def compute_terminal_set(A, B, K_f, S_xbar, S_ubar, lam_f):
    """Maximum-volume contractive ellipsoid and its inscribed zonotope ``Z_f``."""
    K_f = np.atleast_2d(np.asarray(K_f, dtype=float))
    problem = MaxVolEllipsoidProblem(A + B @ K_f, S_xbar.Q, S_xbar.q, S_ubar.Q, S_ubar.q, K_f, lam_f)
    E = solve_maxvol_ellipsoid(problem)
    if not check_lmis(E, problem).passed:
        raise InfeasibleError("terminal ellipsoid failed its own constraint check", reason="terminal_set_infeasible")
    Z_f = inscribed_zonotope(E)
    if inscribed_margin(Z_f, E) < -1e-9:
        raise InfeasibleError("inscribed terminal zonotope leaves the ellipsoid", reason="terminal_set_infeasible")
    # the ellipsoid is contractive, but the zonotope inside it must be invariant on its own
    if containment_check(linear_map(A + B @ K_f, Z_f), Z_f) is None:
        raise InfeasibleError("terminal zonotope is not invariant under A + B K_f", reason="terminal_set_infeasible")
    return E, Z_f


def tighten_constraints(spec, K):
    """``S_x ⊖ (Z_e ⊕ Z_xdev)`` and ``S_u ⊖ K Z_xdev`` as H-polytopes."""
    try:
        S_xbar = pontryagin_diff(spec.S_x, minkowski_sum(spec.Z_e, spec.Z_xdev))
    except EmptySetError as err:
        raise InfeasibleError(f"tightened state set is empty: {err}", reason="state_tightening_empty") from err
    try:
        S_ubar = pontryagin_diff(spec.S_u, linear_map(K, spec.Z_xdev))
    except EmptySetError as err:
        raise InfeasibleError(f"tightened input set is empty: {err}", reason="input_tightening_empty") from err
    return S_xbar, S_ubar


def search_contraction(spec, which, L=None, gain_weight=0.0, tol=1e-3, floor=1e-3):
    """Smallest contraction ratio for which the observer (or feedback) LP is feasible.

    Returns ``(lam_min, gain, certificate)``.
    """
    if which == "observer":
        solve = lambda lam: synthesize_observer_gain(spec, lam, gain_weight)  # noqa: E731
    elif which == "feedback":
        if L is None:
            raise ValueError("feedback search needs the observer gain L")
        solve = lambda lam: synthesize_feedback_gain(spec, L, lam, gain_weight)  # noqa: E731
    else:
        raise ValueError("which must be 'observer' or 'feedback'")

    def attempt(lam):
        try:
            return solve(lam)
        except InfeasibleError:
            return None

    best = attempt(1.0)
    if best is None:
        raise InfeasibleError(f"{which} LP infeasible even without contraction", reason=f"{which}_infeasible")
    res = attempt(floor)
    if res is not None:
        return floor, res[0], res[1]
    lo, hi = floor, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = attempt(mid)
        if res is None:
            lo = mid
        else:
            hi, best = mid, res
    return hi, best[0], best[1]


def synthesize(spec, cost, lam_L, lam_xdev, lam_f, K_f=None, gain_weight=0.0, L=None, K=None):
    """Run the offline chain: observer gain, tube gain, tightening, terminal gain and set.

    ``L``, ``K`` and ``K_f`` may be supplied to certify given gains instead of
    synthesizing them.
    """
    if spec.S_x is None or spec.S_u is None or spec.Z_xdev is None:
        raise ValueError("control synthesis needs S_x, S_u and Z_xdev")
    certs = {}
    if L is None:
        L, certs["observer"] = synthesize_observer_gain(spec, lam_L, gain_weight)
    else:
        L = np.atleast_2d(np.asarray(L, dtype=float))
        certs["observer"] = verify_observer_gain(spec, L, lam_L)
        if certs["observer"] is None:
            raise InfeasibleError("supplied observer gain is not certified", reason="observer_infeasible")
    if K is None:
        K, certs["feedback"] = synthesize_feedback_gain(spec, L, lam_xdev, gain_weight)
    else:
        K = np.atleast_2d(np.asarray(K, dtype=float))
        certs["feedback"] = verify_feedback_gain(spec, K, L, lam_xdev)
        if certs["feedback"] is None:
            raise InfeasibleError("supplied feedback gain is not certified", reason="feedback_infeasible")
    S_xbar, S_ubar = tighten_constraints(spec, K)
    K_f, certs["terminal"] = synthesize_terminal_gain(cost, spec.A, spec.B, K_f, gain_weight)
    P, Z_f = compute_terminal_set(spec.A, spec.B, K_f, S_xbar, S_ubar, lam_f)
    return SynthesizedGains(L, K, K_f, lam_L, lam_xdev, lam_f, P, Z_f, S_xbar, S_ubar, certs)


def _same_polytope(a, b, tol=1e-7):
    return a.Q.shape == b.Q.shape and np.allclose(a.Q, b.Q, atol=tol) and np.allclose(a.q, b.q, atol=tol)


def verify_gains(spec, cost, gains):
    """Re-check every certificate and terminal condition of ``gains``.

    Returns a dict of named booleans.
    """
    out = {}
    pairs = {
        "observer": observer_containment(spec, gains.L, gains.lam_L),
        "feedback": feedback_containment(spec, gains.K, gains.L, gains.lam_xdev),
        "terminal": terminal_containment(cost, spec.A, spec.B, gains.K_f),
    }
    for name, (inner, outer) in pairs.items():
        cert = gains.certificates.get(name)
        out[name] = bool(cert is not None and cert.verify(inner, outer))
    problem = MaxVolEllipsoidProblem(spec.A + spec.B @ gains.K_f, gains.S_xbar.Q, gains.S_xbar.q,
                                     gains.S_ubar.Q, gains.S_ubar.q, gains.K_f, gains.lam_f)
    try:
        S_xbar, S_ubar = tighten_constraints(spec, gains.K)
        out["tightening"] = _same_polytope(S_xbar, gains.S_xbar) and _same_polytope(S_ubar, gains.S_ubar)
    except InfeasibleError:
        out["tightening"] = False
    out["terminal_set"] = check_lmis(gains.P, problem).passed
    out["inscribed"] = inscribed_margin(gains.Z_f, gains.P) >= -1e-9
    tol = get_tolerances().feasibility
    out["terminal_in_state_set"] = all(
        support_function(gains.Z_f, row) <= b + tol for row, b in zip(gains.S_xbar.Q, gains.S_xbar.q))
    A_f = spec.A + spec.B @ gains.K_f
    out["terminal_invariant"] = containment_check(linear_map(A_f, gains.Z_f), gains.Z_f) is not None
    KZ = linear_map(gains.K_f, gains.Z_f)
    out["terminal_input"] = all(
        support_function(KZ, row) <= b + tol for row, b in zip(gains.S_ubar.Q, gains.S_ubar.q))
    return out


def synthesize_baseline(spec, Q_L, R_L, Q_K, R_K, lam_f):
    """Certainty-equivalence gains for comparison: Riccati observer and LQR feedback.

    ``K`` and ``K_f`` both equal the LQR gain. No tube is used, so the
    constraint sets stay untightened and no certificates are produced.
    """
    L = kalman_gain(spec.A, spec.C, Q_L, R_L).gain
    K = lqr_gain(spec.A, spec.B, Q_K, R_K)
    S_x, S_u = to_hrep(spec.S_x), to_hrep(spec.S_u)
    P, Z_f = compute_terminal_set(spec.A, spec.B, K, S_x, S_u, lam_f)
    return SynthesizedGains(L, K, K.copy(), None, None, lam_f, P, Z_f, S_x, S_u, {})
