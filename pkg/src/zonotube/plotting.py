"""SVG figures for rollout logs.

Output is deterministic: SVG element ids are salted with a fixed string, no
creation date is embedded and text is stored as text rather than glyph paths.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from zonotube.sets import enumerate_vertices, linear_map, minkowski_sum, to_hrep  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 3.4  # one column, inches
fig_size = [fig_width, fig_width * golden_mean]
colors = ["#08589e", "#e34a33", "#2b8cbe", "#31a354", "#756bb1", "#636363"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 9,
    "axes.linewidth": 0.6,
    "font.family": "serif",
    "font.size": 8,
    "mathtext.fontset": "stix",
    "legend.fontsize": 7,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "figure.figsize": fig_size,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "svg.fonttype": "none",
    "svg.hashsalt": "zonotube",
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def _new(nrows=1, ncols=1, height_scale=1.0):
    with plt.rc_context(params):
        fig, ax = plt.subplots(nrows, ncols, figsize=(fig_width, fig_width * golden_mean * height_scale),
                               squeeze=False)
    return fig, ax


def projected_outline(s, dims=(0, 1)):
    """Counter-clockwise vertices of the 2-D projection of ``s`` onto ``dims``."""
    P = np.zeros((2, s.dim))
    P[0, dims[0]] = P[1, dims[1]] = 1.0
    flat = to_hrep(linear_map(P, s))
    V = enumerate_vertices(flat)
    if V.shape[0] < 3:
        return V
    mid = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - mid[1], V[:, 0] - mid[0]))
    return V[order]


def plot_trajectory(log, path, tube=None, dims=(0, 1)):
    """True and estimated states in the plane of ``dims``.

    With ``tube`` (the set ``Z_e + Z_xdev``) its outline is drawn around each
    nominal state of the log.
    """
    with plt.rc_context(params):
        fig, ax = _new()
        ax = ax[0, 0]
        i, j = dims
        if tube is not None and log.xbar is not None:
            V = projected_outline(tube, dims)
            if V.shape[0] >= 3:
                for k, xb in enumerate(log.xbar):
                    poly = plt.Polygon(V + xb[[i, j]], closed=True, fill=True, lw=0.3,
                                       fc="#a8ddb5", ec="#4eb3d3", alpha=0.25,
                                       label="tube" if k == 0 else None)
                    ax.add_patch(poly)
        if log.xbar is not None:
            ax.plot(log.xbar[:, i], log.xbar[:, j], ":", color=colors[5], label="nominal")
        ax.plot(log.x[:, i], log.x[:, j], "-", color=colors[0], label="true")
        ax.plot(log.xhat[:, i], log.xhat[:, j], "--", color=colors[1], label="estimate")
        ax.plot(*log.x[0, [i, j]], "o", color=colors[0])
        ax.set_xlabel(f"$x_{i + 1}$")
        ax.set_ylabel(f"$x_{j + 1}$")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_states(log, path):
    """Each state coordinate against time, true and estimated."""
    n = log.x.shape[1]
    k = np.arange(log.steps + 1)
    with plt.rc_context(params):
        fig, axes = _new(n, 1, height_scale=0.6 * n)
        for i in range(n):
            ax = axes[i, 0]
            ax.plot(k, log.x[:, i], "-", color=colors[0], label="true")
            ax.plot(k, log.xhat[:, i], "--", color=colors[1], label="estimate")
            ax.set_ylabel(f"$x_{i + 1}$")
            if i < n - 1:
                ax.set_xticklabels([])
        axes[0, 0].legend(loc="best")
        axes[-1, 0].set_xlabel("step $k$")
        return _save(fig, path)


def plot_inputs(log, path, bounds=None):
    """Applied inputs against time, with constraint lines ``(lower, upper)`` if given."""
    m = log.u.shape[1]
    k = np.arange(log.steps)
    with plt.rc_context(params):
        fig, axes = _new(m, 1, height_scale=0.5 * m)
        for i in range(m):
            ax = axes[i, 0]
            ax.step(k, log.u[:, i], where="post", color=colors[2])
            if bounds is not None:
                for b in (bounds[0][i], bounds[1][i]):
                    ax.axhline(b, color=colors[5], lw=0.6, ls="--")
            ax.set_ylabel(f"$u_{i + 1}$")
            if i < m - 1:
                ax.set_xticklabels([])
        axes[-1, 0].set_xlabel("step $k$")
        return _save(fig, path)


def plot_error_comparison(logs, path):
    """Estimation error norm against time for several logs on one axis."""
    with plt.rc_context(params):
        fig, ax = _new()
        ax = ax[0, 0]
        positive = False
        for log in logs:
            k = np.arange(log.steps + 1)
            err = np.linalg.norm(log.error, axis=1)
            positive |= bool(np.any(err > 0))
            ax.plot(k, err, label=log.label)
        ax.set_xlabel("step $k$")
        ax.set_ylabel(r"$\|x - \hat{x}\|_2$")
        if positive:
            ax.set_yscale("log")
        ax.legend(loc="best")
        return _save(fig, path)


def tube_set(spec):
    """``Z_e + Z_xdev`` if the plant has a deviation seed, else None."""
    if spec.Z_xdev is None:
        return None
    return minkowski_sum(spec.Z_e, spec.Z_xdev)
