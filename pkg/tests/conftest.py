import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zonotube.experiment import ExperimentConfig, synthesize_experiment
from zonotube.sets import ConstrainedZonotope

settings.register_profile("zonotube", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("zonotube")


def random_cz(rng, dim=2, max_gens=4, max_cons=2, center_scale=1.0):
    """A nonempty random constrained zonotope.

    The constraint offset is generated from a coefficient vector strictly
    inside the unit box, so the set is never empty.
    """
    sigma = int(rng.integers(dim, max_gens + 1))
    nc = int(rng.integers(0, min(max_cons, sigma - 1) + 1))
    c = center_scale * rng.normal(size=dim)
    G = rng.normal(size=(dim, sigma))
    F = rng.normal(size=(nc, sigma))
    a0 = rng.uniform(-0.5, 0.5, size=sigma)
    return ConstrainedZonotope(c, G, F, F @ a0)


def bundled_raw(name):
    return json.loads(resources.files("zonotube").joinpath(f"configs/{name}.json").read_text())


@pytest.fixture(scope="session")
def robot_cfg():
    return ExperimentConfig.from_dict(bundled_raw("robot"))


@pytest.fixture(scope="session")
def observer_cfg():
    return ExperimentConfig.from_dict(bundled_raw("observer_comparison"))


@pytest.fixture(scope="session")
def robot_gains_doc(robot_cfg):
    return synthesize_experiment(robot_cfg)


@pytest.fixture(scope="session")
def observer_gains_doc(observer_cfg):
    return synthesize_experiment(observer_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
