"""Experiment configs and gains files.

A single JSON config drives both the offline phase (gain synthesis, written
to a gains file) and the online phase (seeded rollouts). Configs are validated
against ``schema/experiment.schema.json`` before anything is computed; unknown
keys are rejected.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from zonotube.errors import ConfigError, InfeasibleError
from zonotube.estimation import kalman_gain
from zonotube.model import PlantSpec
from zonotube.sets import ConstrainedZonotope, ContainmentCertificate
from zonotube.sim import (
    ControlSetup,
    NoiseModel,
    RobotModel,
    run_observer_comparison,
    run_robot_experiment,
    sinusoid_input,
)
from zonotube.synthesis import (
    CostSets,
    SynthesizedGains,
    observer_containment,
    synthesize,
    synthesize_baseline,
    synthesize_observer_gain,
    verify_gains,
)

GAINS_FORMAT = 1
ROBOT_VARIANTS = ("perception_mpc", "gaussian_mpc")
OBSERVER_VARIANTS = ("set_membership", "kalman")


def _load_schema():
    text = resources.files("zonotube").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def bundled_configs():
    """Names of the configs shipped with the package."""
    root = resources.files("zonotube").joinpath("configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err


def _weight(w, size):
    if np.isscalar(w):
        return float(w) * np.eye(size)
    W = np.asarray(w, dtype=float)
    if W.shape != (size, size):
        raise ConfigError(f"weight matrix must be {size}x{size}, got {W.shape}")
    return W


def _set(doc):
    if "half_widths" in doc:
        if len(doc["half_widths"]) != len(doc["center"]):
            raise ConfigError("half_widths and center lengths differ")
        return ConstrainedZonotope.box(doc["center"], doc["half_widths"])
    return ConstrainedZonotope.from_dict(doc)


@dataclass
class ExperimentConfig:
    """Validated config plus the objects built from it."""

    raw: dict
    spec: PlantSpec
    cost: CostSets = None

    @classmethod
    def from_dict(cls, doc):
        try:
            jsonschema.validate(doc, _load_schema())
        except jsonschema.ValidationError as err:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {err.message}") from err
        try:
            plant = doc["plant"]
            if "robot" in plant:
                robot = RobotModel(**plant["robot"])
                A, B, C = robot.A, robot.B, robot.C
            else:
                A, B, C = plant["A"], plant["B"], plant["C"]
            sets = {k: _set(v) for k, v in doc["sets"].items()}
            spec = PlantSpec(A, B, C, validity=dict(doc.get("validity", {})), **sets)
            cost = None
            if "costs" in doc:
                cost = CostSets(*(_set(doc["costs"][k]) for k in ("Q", "R", "P")))
        except ConfigError:
            raise
        except (ValueError, TypeError) as err:
            raise ConfigError(f"config is inconsistent: {err}") from err
        cfg = cls(doc, spec, cost)
        cfg._check_experiment()
        return cfg

    def _check_experiment(self):
        doc, n = self.raw, self.spec.n
        for key in ("initial_state", "initial_estimate"):
            if key in doc and len(doc[key]) != n:
                raise ConfigError(f"{key} must have length {n}")
        if self.experiment == "observer_comparison":
            for key in ("input_signal", "kalman", "initial_state"):
                if key not in doc:
                    raise ConfigError(f"observer_comparison configs need {key!r}")
            if self.spec.m != 1:
                raise ConfigError("the sinusoidal input signal drives single-input plants only")
        else:
            missing = [k for k in ("costs", "horizon", "baseline", "initial_state") if k not in doc]
            missing += [f"sets.{k}" for k in ("S_x", "S_u", "Z_xdev") if k not in doc["sets"]]
            missing += [f"contraction.{k}" for k in ("feedback", "terminal") if k not in doc["contraction"]]
            if missing:
                raise ConfigError(f"robot configs need {', '.join(missing)}")

    @property
    def name(self):
        return self.raw["name"]

    @property
    def experiment(self):
        return self.raw["experiment"]

    @property
    def seeds(self):
        start = self.raw.get("seed", 0)
        return list(range(start, start + self.raw.get("num_seeds", 1)))

    @property
    def steps(self):
        return self.raw["steps"]

    @property
    def gain_weight(self):
        return float(self.raw.get("gain_weight", 0.0))

    @property
    def x0(self):
        return np.asarray(self.raw["initial_state"], dtype=float)

    @property
    def xhat0(self):
        return np.asarray(self.raw.get("initial_estimate", self.raw["initial_state"]), dtype=float)

    @property
    def noise(self):
        nd = self.raw["noise"]
        kw = {"scale": nd["scale"]} if "scale" in nd else {}
        return NoiseModel.from_set(nd["kind"], self.spec.Z_v, **kw)

    def weights(self, block):
        """Baseline or Kalman weights as matrices of the right sizes."""
        s = self.spec
        sizes = {"Q_cov": s.n, "R_cov": s.ell, "Q_L": s.n, "R_L": s.ell, "Q_K": s.n, "R_K": s.m}
        return {k: _weight(v, sizes[k]) for k, v in self.raw[block].items()}


def load_config(path_or_name):
    """Load a config file, or a bundled config by name (``"robot"``)."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in bundled_configs():
        text = resources.files("zonotube").joinpath(f"configs/{path_or_name}.json").read_text()
        return ExperimentConfig.from_dict(json.loads(text))
    return ExperimentConfig.from_dict(_read_json(p))


# -- offline phase ----------------------------------------------------------------

def synthesize_experiment(cfg):
    """Offline computations for ``cfg``; returns the gains document."""
    doc = {"format": GAINS_FORMAT, "config": cfg.name, "experiment": cfg.experiment}
    contraction = cfg.raw["contraction"]
    if cfg.experiment == "observer_comparison":
        lam = contraction["observer"]
        L, cert = synthesize_observer_gain(cfg.spec, lam, cfg.gain_weight)
        kw = cfg.weights("kalman")
        kal = kalman_gain(cfg.spec.A, cfg.spec.C, kw["Q_cov"], kw["R_cov"])
        doc["observer"] = {"L": L.tolist(), "lam_L": lam, "certificate": cert.to_dict()}
        doc["kalman"] = {"gain": kal.gain.tolist(), "iterations": kal.iterations, "residual": kal.residual}
        return doc
    K_f = cfg.raw.get("terminal_gain")
    gains = synthesize(cfg.spec, cfg.cost, contraction["observer"], contraction["feedback"],
                       contraction["terminal"], K_f=K_f, gain_weight=cfg.gain_weight)
    bw = cfg.weights("baseline")
    base = synthesize_baseline(cfg.spec, bw["Q_L"], bw["R_L"], bw["Q_K"], bw["R_K"], contraction["terminal"])
    doc["perception"] = gains.to_dict()
    doc["baseline"] = base.to_dict()
    return doc


def write_gains(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_gains(path):
    doc = _read_json(path)
    if not isinstance(doc, dict) or doc.get("format") != GAINS_FORMAT:
        raise ConfigError(f"{path} is not a gains file (format {GAINS_FORMAT})")
    return doc


def check_gains(cfg, doc):
    """Re-verify a gains document against ``cfg``.

    Returns a dict of named booleans; every entry must hold for the document
    to be trusted. The set-membership gains are checked through their
    certificates, the baseline gains by recomputation.
    """
    if doc.get("experiment") != cfg.experiment:
        return {"experiment": False}
    try:
        if cfg.experiment == "observer_comparison":
            obs = doc["observer"]
            L = np.atleast_2d(np.asarray(obs["L"], dtype=float))
            cert = ContainmentCertificate.from_dict(obs["certificate"])
            inner, outer = observer_containment(cfg.spec, L, float(obs["lam_L"]))
            kw = cfg.weights("kalman")
            kal = kalman_gain(cfg.spec.A, cfg.spec.C, kw["Q_cov"], kw["R_cov"]).gain
            return {
                "observer": cert.verify(inner, outer),
                "contraction": float(obs["lam_L"]) <= cfg.raw["contraction"]["observer"],
                "kalman": np.allclose(np.asarray(doc["kalman"]["gain"]), kal, rtol=0, atol=1e-9),
            }
        gains = SynthesizedGains.from_dict(doc["perception"])
        out = {f"perception.{k}": bool(v) for k, v in verify_gains(cfg.spec, cfg.cost, gains).items()}
        bw = cfg.weights("baseline")
        ref = synthesize_baseline(cfg.spec, bw["Q_L"], bw["R_L"], bw["Q_K"], bw["R_K"], cfg.raw["contraction"]["terminal"])
        stored = SynthesizedGains.from_dict(doc["baseline"])
        out["baseline"] = all(np.allclose(a, b, rtol=0, atol=1e-8) for a, b in (
            (stored.L, ref.L), (stored.K, ref.K), (stored.K_f, ref.K_f), (stored.P.P, ref.P.P)))
        return out
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"malformed gains file: {err}") from err


# -- online phase -----------------------------------------------------------------

def _control_setup(cfg):
    return ControlSetup(cfg.spec, cfg.cost, cfg.raw["horizon"], cfg.x0, cfg.xhat0, cfg.noise, cfg.steps)


def run_seed(cfg, doc, seed):
    """All rollouts of one seed, as ``{variant: TrajectoryLog}``."""
    if cfg.experiment == "observer_comparison":
        sig = cfg.raw["input_signal"]
        logs = run_observer_comparison(
            cfg.spec, np.asarray(doc["observer"]["L"], dtype=float), np.asarray(doc["kalman"]["gain"], dtype=float),
            cfg.x0, cfg.xhat0, cfg.noise, cfg.steps,
            sinusoid_input(sig["offset"], sig["amplitude"], sig["period"]), seed)
        return dict(zip(OBSERVER_VARIANTS, logs))
    setup = _control_setup(cfg)
    perception = SynthesizedGains.from_dict(doc["perception"])
    baseline = SynthesizedGains.from_dict(doc["baseline"])
    return {v: run_robot_experiment(v, setup, perception, baseline, seed) for v in ROBOT_VARIANTS}


def _run_seed_job(args):
    raw, doc, seed = args
    try:
        return seed, run_seed(ExperimentConfig.from_dict(raw), doc, seed), None
    except InfeasibleError as err:
        return seed, None, {"reason": err.reason, "step": err.step, "message": str(err)}


def run_seeds(cfg, doc, seeds=None, jobs=1):
    """Run ``seeds`` (default: the config's) and return results in seed order.

    Each result is ``(seed, logs or None, failure or None)``. ``jobs > 1``
    spreads seeds over worker processes; results do not depend on it.
    """
    seeds = cfg.seeds if seeds is None else list(seeds)
    tasks = [(cfg.raw, doc, s) for s in seeds]
    if jobs <= 1:
        return [_run_seed_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_seed_job, tasks))


def late_mean_error(log):
    """Norm of the mean estimation error over the second half of the run."""
    start = log.steps // 2
    return float(np.linalg.norm(log.error[start:].mean(axis=0)))


def summarize(cfg, results):
    """Summary document for a batch of seeds. ``ok`` is True iff every
    enforced membership held and no rollout failed."""
    per_seed = []
    failures = []
    for seed, logs, failure in results:
        if failure is not None:
            failures.append({"seed": seed, **failure})
            continue
        entry = {"seed": seed}
        for label, log in logs.items():
            entry[label] = {"J_s": log.total_cost, "all_members": log.all_members(),
                            "late_mean_error": late_mean_error(log)}
        per_seed.append(entry)
    out = {"config": cfg.name, "experiment": cfg.experiment, "seeds": per_seed, "failures": failures}
    if cfg.experiment == "observer_comparison":
        out["kalman_worse"] = sum(e["kalman"]["late_mean_error"] > e["set_membership"]["late_mean_error"]
                                  for e in per_seed)
        enforced = [e["set_membership"]["all_members"] for e in per_seed]
    else:
        out["perception_wins"] = sum(e["perception_mpc"]["J_s"] < e["gaussian_mpc"]["J_s"] for e in per_seed)
        enforced = [e["perception_mpc"]["all_members"] for e in per_seed]
    out["membership_ok"] = all(enforced)
    out["ok"] = out["membership_ok"] and not failures
    return out
