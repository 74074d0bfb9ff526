"""Centralized numerical tolerances.

Every module reads tolerances through :func:`get_tolerances` so a single
override (programmatic or via the ``ZONOTUBE_TOLERANCES`` environment
variable, a JSON object such as ``{"feasibility": 1e-8}``) applies everywhere.
"""

import json
import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-9
    psd_margin: float = 1e-8
    probe_slack: float = 1e-8
    symmetry: float = 1e-10
    projection_budget: int = 12
    polar_budget: int = 10


_ENV_VAR = "ZONOTUBE_TOLERANCES"
_current = None


def _from_env():
    raw = os.environ.get(_ENV_VAR)
    if not raw:
        return Tolerances()
    overrides = json.loads(raw)
    known = {f.name for f in fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown tolerance keys in {_ENV_VAR}: {sorted(unknown)}")
    return replace(Tolerances(), **overrides)


def get_tolerances():
    global _current
    if _current is None:
        _current = _from_env()
    return _current


def set_tolerances(tol=None, **overrides):
    """Replace the active tolerances; returns the previous value."""
    global _current
    previous = get_tolerances()
    base = tol if tol is not None else previous
    _current = replace(base, **overrides)
    return previous
