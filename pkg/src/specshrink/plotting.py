"""Report figures written next to the CSV tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LABELS = {
    "avg_periodogram": "averaged periodogram",
    "one_factor": "1-factor model",
    "ddsse": "DDSSE (simplified)",
    "ddmse": "DDMSE",
}
STYLE = {
    "avg_periodogram": dict(color="0.35", ls="--", marker="s"),
    "one_factor": dict(color="tab:orange", ls="-.", marker="^"),
    "ddsse": dict(color="tab:green", ls=":", marker="D"),
    "ddmse": dict(color="tab:blue", ls="-", marker="o"),
}

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.0, 3.8),
    "savefig.dpi": 150,
}


def plot_mise_report(report, path, title: str | None = None) -> None:
    xlabel = "smoothing span m" if report.sweep_name == "m" else "std. dev. of second factor"
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for est in LABELS:
            rows = [r for r in report.rows if r.estimator == est]
            if not rows:
                continue
            x = np.array([r.sweep_value for r in rows])
            y = np.array([r.mise_mean for r in rows])
            se = np.array([r.mise_se for r in rows])
            ax.errorbar(x, y, yerr=2 * se, label=LABELS[est], capsize=2, ms=4, lw=1.2, **STYLE[est])
        ax.set_xlabel(xlabel)
        ax.set_ylabel("MISE")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_condition_numbers(frequencies, conds: dict, path, span: int) -> None:
    """Condition number against frequency on a log scale; singular points are dropped."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for name, values in conds.items():
            v = np.asarray(values, dtype=float)
            ok = np.isfinite(v)
            ax.semilogy(np.asarray(frequencies)[ok], v[ok], lw=1, label=name)
        ax.set_xlabel("frequency (rad)")
        ax.set_ylabel("condition number")
        ax.set_title(f"m = {span}")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
