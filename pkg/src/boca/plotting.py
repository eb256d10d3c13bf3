"""Regret-vs-capital figures written next to the regret CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import RegretCurve  # noqa: E402

STYLE = {
    "boca": {"color": "tab:red", "marker": "o"},
    "gp_ucb": {"color": "tab:blue", "marker": "s"},
    "gp_ei": {"color": "tab:green", "marker": "^"},
}


def plot_regret(curves: dict[str, RegretCurve], path, title: str | None = None, log_scale: bool = True) -> Path:
    """One line per method with one-standard-error bands; undefined cells are left blank."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for label, curve in curves.items():
        style = STYLE.get(label, {})
        ax.plot(curve.capital, curve.mean, label=label, markevery=10, markersize=4, **style)
        ax.fill_between(curve.capital, curve.mean - curve.stderr, curve.mean + curve.stderr,
                        color=style.get("color"), alpha=0.2, linewidth=0)
    if log_scale and all((c.mean[c.n_defined > 0] > 0).all() for c in curves.values()):
        ax.set_yscale("log")
    ax.set_xlabel("capital spent")
    ax.set_ylabel("simple regret")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
