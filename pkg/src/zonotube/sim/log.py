"""Per-step rollout records and their CSV/JSON serialization."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

MEMBERSHIP_COLUMNS = ("mem_e", "mem_xdev", "mem_x", "mem_u")
MPC_DUMP_COLUMNS = ("k", "num_vars", "num_rows", "status", "beta", "t_P", "objective", "solve_time")


def csv_header(n, m, ell):
    cols = ["k"]
    cols += [f"x_{i + 1}" for i in range(n)]
    cols += [f"xhat_{i + 1}" for i in range(n)]
    cols += [f"xbar_{i + 1}" for i in range(n)]
    cols += [f"u_{i + 1}" for i in range(m)]
    cols += [f"v_{i + 1}" for i in range(ell)]
    cols += ["stage_cost", *MEMBERSHIP_COLUMNS]
    return cols


@dataclass
class TrajectoryLog:
    """One closed-loop (or open-loop) rollout.

    States carry ``steps + 1`` rows; inputs, noise and stage costs carry
    ``steps`` rows. Quantities that do not apply to a rollout are None and
    are written as empty CSV fields. Membership flags are None where they
    were not evaluated.
    """

    label: str
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    v: np.ndarray
    xbar: np.ndarray = None
    w: np.ndarray = None
    stage_cost: np.ndarray = None
    terminal_cost: float = None
    memberships: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return self.u.shape[0]

    @property
    def error(self):
        return self.x - self.xhat

    @property
    def total_cost(self):
        if self.stage_cost is None or self.terminal_cost is None:
            return None
        return float(np.sum(self.stage_cost) + self.terminal_cost)

    def all_members(self, columns=MEMBERSHIP_COLUMNS):
        """True iff every evaluated membership flag in ``columns`` holds."""
        for col in columns:
            flags = self.memberships.get(col)
            if flags is None:
                continue
            if not all(f for f in flags if f is not None):
                return False
        return True

    def rows(self):
        n, m, ell = self.x.shape[1], self.u.shape[1], self.v.shape[1]
        blank = lambda k: [""] * k  # noqa: E731
        for k in range(self.steps + 1):
            last = k == self.steps
            row = [k]
            row += list(self.x[k])
            row += list(self.xhat[k])
            row += list(self.xbar[k]) if self.xbar is not None else blank(n)
            row += blank(m) if last else list(self.u[k])
            row += blank(ell) if last else list(self.v[k])
            row += [""] if (last or self.stage_cost is None) else [self.stage_cost[k]]
            for col in MEMBERSHIP_COLUMNS:
                flags = self.memberships.get(col)
                if flags is None or k >= len(flags) or flags[k] is None:
                    row.append("")
                else:
                    row.append(int(bool(flags[k])))
            yield row

    def write_csv(self, path):
        n, m, ell = self.x.shape[1], self.u.shape[1], self.v.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(csv_header(n, m, ell))
            for row in self.rows():
                writer.writerow([_fmt(v) for v in row])

    def summary(self):
        return {
            "label": self.label,
            "steps": self.steps,
            "J_s": self.total_cost,
            "terminal_cost": self.terminal_cost,
            "all_members": self.all_members(),
            "meta": self.meta,
        }


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _dims(header):
    def count(prefix):
        return sum(1 for h in header if h.startswith(prefix) and h[len(prefix):].isdigit())
    return count("x_"), count("u_"), count("v_")


def read_csv(path, label=None):
    """Inverse of :meth:`TrajectoryLog.write_csv`. Raises ValueError on malformed input."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty log file")
    header, body = rows[0], rows[1:]
    n, m, ell = _dims(header)
    if header != csv_header(n, m, ell) or n == 0:
        raise ValueError("unexpected CSV header")
    if len(body) < 2:
        raise ValueError("log has no steps")
    steps = len(body) - 1
    idx = {h: i for i, h in enumerate(header)}

    def column_block(prefix, count, nrows):
        out = np.full((nrows, count), np.nan)
        for k in range(nrows):
            for i in range(count):
                cell = body[k][idx[f"{prefix}{i + 1}"]]
                out[k, i] = float(cell) if cell != "" else np.nan
        return out

    try:
        if any(len(r) != len(header) for r in body):
            raise ValueError("ragged CSV rows")
        if [int(r[0]) for r in body] != list(range(steps + 1)):
            raise ValueError("step column is not 0..N")
        x = column_block("x_", n, steps + 1)
        xhat = column_block("xhat_", n, steps + 1)
        xbar = column_block("xbar_", n, steps + 1)
        u = column_block("u_", m, steps)
        v = column_block("v_", ell, steps)
        sc = [r[idx["stage_cost"]] for r in body[:steps]]
        stage = np.array([float(s) for s in sc]) if all(s != "" for s in sc) else None
        mems = {}
        for col in MEMBERSHIP_COLUMNS:
            vals = [r[idx[col]] for r in body]
            if any(s != "" for s in vals):
                mems[col] = [None if s == "" else bool(int(s)) for s in vals]
    except (ValueError, KeyError) as err:
        raise ValueError(f"malformed log: {err}") from err
    if np.isnan(x).any() or np.isnan(xhat).any():
        raise ValueError("malformed log: missing state values")
    return TrajectoryLog(label or str(path), x, xhat, u, v,
                         xbar=None if np.isnan(xbar).all() else xbar,
                         stage_cost=stage, memberships=mems)


def write_mpc_dump(path, records):
    """Per-step MPC solve records (LP size, status, slack values, wall time) as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MPC_DUMP_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(rec[c]) for c in MPC_DUMP_COLUMNS])


def write_summary(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
