"""Figure rendering for the CLI report path.

Every function builds a matplotlib figure from the same rows that go
into the delimited output, so a CSV written to disk can be accompanied
by its rendered plot. The Agg backend is forced: figures only ever go to
files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_GOLDEN = 0.618


def _new_axes(width: float = 6.4):
    fig, ax = plt.subplots(figsize=(width, width * _GOLDEN))
    ax.grid(True, alpha=0.3)
    return fig, ax


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def trajectory_figure(times, p1, p2, title="probability trajectory"):
    fig, ax = _new_axes()
    ax.plot(times, p1, label="p1", color="tab:blue")
    ax.plot(times, p2, label="p2", color="tab:orange")
    ax.set_xlabel("t")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(title)
    ax.legend()
    return fig


def interval_figure(times, gaps, t_star, title="distance from uniform"):
    fig, ax = _new_axes()
    ax.plot(times, [abs(g) for g in gaps], color="tab:blue", label="|p1 - p2|")
    ax.axvline(t_star, color="tab:red", linestyle="--", label=f"t* = {t_star:.6g}")
    ax.set_xlabel("t")
    ax.set_ylabel("|p1 - p2|")
    ax.set_title(title)
    ax.legend()
    return fig


def ck_residual_figure(windows, residuals, title="composition residuals"):
    """Residual of each triple against its outer window u - s."""
    fig, ax = _new_axes()
    ax.scatter(windows, residuals, s=6, alpha=0.5, color="tab:blue")
    ax.set_xlabel("u - s")
    ax.set_ylabel("max-entry residual")
    ax.set_title(title)
    return fig


def ensemble_figure(times, empirical_p1, analytic_p1, n_paths,
                    title="empirical vs analytic marginals"):
    fig, ax = _new_axes()
    ax.plot(times, analytic_p1, color="tab:blue", label="analytic p1")
    err = [
        3.0 * (p * (1.0 - p) / n_paths) ** 0.5 if 0.0 < p < 1.0 else 0.0
        for p in analytic_p1
    ]
    ax.errorbar(
        times, empirical_p1, yerr=err, fmt="o", color="tab:orange",
        capsize=3, label=f"empirical p1 (n={n_paths}, 3 s.e. bars)",
    )
    ax.set_xlabel("t")
    ax.set_ylabel("p1")
    ax.set_title(title)
    ax.legend()
    return fig
