"""Figure rendering for the report paths.

Every figure is written next to its delimited counterpart (trace.csv,
metrics.json, ablation.csv) so a run directory is self-describing.  Output
is pinned for byte determinism: fixed figure geometry, the Agg backend,
and fixed PNG metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_PNG_META = {"Software": "mirrorstereo"}
_DPI = 100


def _save(fig, path: str | Path) -> None:
    fig.savefig(Path(path), dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def save_trace_figure(trace, path: str | Path) -> None:
    """Loss-term curves over iterations for one optimization run."""
    it = [row.iteration for row in trace]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, series in (
        ("total", [row.total for row in trace]),
        ("pairwise", [row.pairwise for row in trace]),
        ("rot", [row.rot for row in trace]),
        ("trans", [row.trans for row in trace]),
    ):
        ax.plot(it, series, label=name, linewidth=1.5)
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title("alignment loss trace")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_metrics_figure(report, pose, path: str | Path) -> None:
    """Bar chart of the cloud metrics plus a pose-error annotation."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    names = ["Comp.", "Accuracy", "F1"]
    values = [report.completeness, report.accuracy, report.f1]
    bars = ax.bar(names, values, color=["#4878cf", "#6acc65", "#d65f5f"])
    for bar, val in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, val + 1.0,
                f"{val:.2f}", ha="center", va="bottom", fontsize=9)
    ax.set_ylim(0, 112)
    ax.set_ylabel("percent")
    unit = "abs" if getattr(pose, "translation_absolute", False) else "%"
    ax.set_title(
        f"chamfer {report.chamfer:.4g}  |  "
        f"R_err {pose.rotation_deg:.3g} deg, T_err {pose.translation:.3g} {unit}")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_ablation_figure(r_sym, r_nosym, t_sym, t_nosym,
                         path: str | Path) -> None:
    """Paired per-run comparison of pose errors with and without the
    symmetric terms. Points below the diagonal favor the symmetric loss."""
    r_sym = np.asarray(r_sym, dtype=float)
    r_nosym = np.asarray(r_nosym, dtype=float)
    t_sym = np.asarray(t_sym, dtype=float)
    t_nosym = np.asarray(t_nosym, dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.2))
    panels = [
        (axes[0], r_nosym, r_sym, "R_err (deg)"),
        (axes[1], t_nosym, t_sym, "T_err"),
    ]
    for ax, x, y, label in panels:
        ax.scatter(x, y, s=18, alpha=0.7, color="#4878cf", edgecolors="none")
        lim = max(float(np.max(x, initial=1e-6)),
                  float(np.max(y, initial=1e-6))) * 1.1
        floor = min(float(np.min(x, initial=lim)),
                    float(np.min(y, initial=lim)), lim) * 0.5
        floor = max(floor, 1e-12)
        ax.plot([floor, lim], [floor, lim], "k--", linewidth=1, alpha=0.6)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlim(floor, lim)
        ax.set_ylim(floor, lim)
        ax.set_xlabel(f"{label} without sym loss")
        ax.set_ylabel(f"{label} with sym loss")
        ax.grid(True, alpha=0.3)
    wins_r = float(np.mean(r_sym < r_nosym)) * 100 if len(r_sym) else 0.0
    wins_t = float(np.mean(t_sym < t_nosym)) * 100 if len(t_sym) else 0.0
    fig.suptitle(f"paired runs: rotation wins {wins_r:.0f}%, "
                 f"translation wins {wins_t:.0f}%")
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    _save(fig, path)
