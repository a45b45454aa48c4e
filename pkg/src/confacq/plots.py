"""Optional SVG renders of the convergence curves and acquisition views (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evaluate import arm_counts


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("plotting needs matplotlib; install the 'plot' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(summary, path, metric: str = "eps_ate"):
    """Mean metric against samples acquired, one line per strategy, shaded 95% band."""
    plt = _pyplot()
    estimators = sorted({c[0] for c in summary.curves})
    fig, axes = plt.subplots(1, len(estimators), figsize=(5 * len(estimators), 4), squeeze=False)
    for ax, est in zip(axes[0], estimators):
        for strat in sorted({c[1] for c in summary.curves if c[0] == est}):
            rows = [c for c in summary.curves if c[0] == est and c[1] == strat and c[2] == metric]
            x = np.array([r[4] for r in rows])
            m = np.array([r[5] for r in rows])
            ci = np.nan_to_num(np.array([r[6] for r in rows]))
            ax.plot(x, m, label=strat)
            ax.fill_between(x, m - ci, m + ci, alpha=0.2)
        ax.set_title(est)
        ax.set_xlabel("samples acquired")
        ax.set_ylabel(metric)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_arm_counts(traces, path):
    """Average cumulative treated / control acquisitions per strategy."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    by = {}
    for tr in traces:
        by.setdefault(tr.strategy, []).append(np.array(arm_counts(tr), dtype=float))
    for strat, arrs in sorted(by.items()):
        n = min(len(a) for a in arrs)
        mean = np.mean([a[:n] for a in arrs], axis=0)
        x = mean.sum(axis=1)
        ax.plot(x, mean[:, 0], label=f"{strat} treated")
        ax.plot(x, mean[:, 1], "--", label=f"{strat} control")
    ax.set_xlabel("samples acquired")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_pca(rows, path):
    """Scatter of exported principal coordinates, coloured by arm."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    pts = np.array([(r[5], r[6], r[7]) for r in rows], dtype=float)
    for arm, label in ((1, "treated"), (0, "control")):
        sel = pts[:, 2] == arm
        ax.scatter(pts[sel, 0], pts[sel, 1], s=8, label=label)
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def render_all(out, summary, traces) -> list[Path]:
    out = Path(out)
    written = [plot_curves(summary, out / f"curve_{m}.svg", m) for m in ("eps_ate", "sqrt_pehe")]
    written.append(plot_arm_counts(traces, out / "arm_counts.svg"))
    return written
