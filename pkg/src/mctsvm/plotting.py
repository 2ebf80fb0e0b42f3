"""Static figures written next to the CLI's record files.

Everything renders through the Agg backend with a fixed rc style, so output
does not depend on the user's matplotlib configuration or a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import MaxNLocator, NullFormatter  # noqa: E402

GOLDEN = (np.sqrt(5) - 1) / 2
WIDTH = 4.5

STYLE = {
    "figure.figsize": (WIDTH, WIDTH * GOLDEN),
    "figure.dpi": 150,
    "savefig.dpi": 200,
    "savefig.bbox": "tight",
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "xtick.direction": "out",
    "ytick.direction": "out",
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "mathtext.fontset": "stix",
}

ARM_STYLE = {
    "supervised": {"color": "black", "linestyle": "--", "marker": "o", "label": "supervised"},
    "semisup": {"color": "black", "linestyle": "-", "marker": "s", "label": "semi-supervised"},
    "ceiling": {"color": "tab:red", "linestyle": "--", "marker": None, "label": "all labels known"},
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_learning_curve(table: list[dict], path, title: str | None = None):
    """Mean test macro-F against labeled-set size, one line per arm, std as a band."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for arm, style in ARM_STYLE.items():
            rows = sorted((r for r in table if r["arm"] == arm), key=lambda r: r["n_labeled"])
            if not rows:
                continue
            x = np.array([r["n_labeled"] for r in rows], dtype=float)
            mu = np.array([r["mean"] for r in rows])
            sd = np.array([r["std"] for r in rows])
            ax.plot(x, mu, **style)
            ax.fill_between(x, mu - sd, mu + sd, color=style["color"], alpha=0.12, linewidth=0)
        sizes = sorted({r["n_labeled"] for r in table})
        ax.set_xscale("log")
        ax.set_xticks(sizes, [str(v) for v in sizes])
        ax.xaxis.set_minor_formatter(NullFormatter())
        ax.set_xlabel("labeled examples")
        ax.set_ylabel("macro F (test)")
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower right")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_bench(records: list[dict], path):
    """Per-seed wall time of each solver (left) and switching gap (right)."""
    solvers = [s for s in ("switching", "simplex", "brute_force") if any(r["solver"] == s for r in records)]
    with plt.rc_context(STYLE):
        fig, (ax_t, ax_g) = plt.subplots(1, 2, figsize=(2 * WIDTH * 0.8, WIDTH * GOLDEN))
        for k, name in enumerate(solvers):
            times = [r["wall_time"] for r in records if r["solver"] == name]
            ax_t.scatter(np.full(len(times), k), times, s=12, color="black", alpha=0.7)
        ax_t.set_xticks(range(len(solvers)), [s.replace("_", " ") for s in solvers])
        ax_t.set_xlim(-0.5, len(solvers) - 0.5)
        ax_t.set_yscale("log")
        ax_t.set_ylabel("wall time (s)")
        gaps = [100 * r["gap"] for r in records if r["solver"] == "switching"]
        ax_g.hist(gaps, bins=min(20, max(len(gaps), 1)), color="0.5", edgecolor="black", linewidth=0.4)
        ax_g.set_xlabel("switching gap to optimum (%)")
        ax_g.set_ylabel("instances")
        ax_g.yaxis.set_major_locator(MaxNLocator(integer=True))
        fig.tight_layout()
        return _save(fig, path)


def plot_trace(trace: list[dict], path):
    """Objective after each label step, with the cu stages marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        y = [r["obj_after_y"] for r in trace]
        ax.plot(np.arange(1, len(y) + 1), y, color="black", marker="o")
        last = None
        for k, r in enumerate(trace, 1):
            if r["cu"] != last:
                ax.axvline(k - 0.5, color="0.8", linewidth=0.6, zorder=0)
                last = r["cu"]
        ax.set_xlabel("label step")
        ax.set_ylabel("objective")
        return _save(fig, path)
