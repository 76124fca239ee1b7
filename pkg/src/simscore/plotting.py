"""Report figures written next to the CSV / JSON outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_average_precision(metrics_by_name, path):
    """Per-query AP bars, one panel per result set, MAP as a dashed line."""
    names = list(metrics_by_name)
    fig, axes = plt.subplots(len(names), 1, figsize=(8, 2.4 * len(names)), squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        m = metrics_by_name[name]
        aps = [q["ap"] for q in m["per_query"]]
        ax.bar(np.arange(len(aps)), aps, color="0.55", width=0.8)
        ax.axhline(m["map"], color="k", ls="--", lw=1)
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("AP")
        ax.set_title(f"{name}  (MAP = {m['map']:.3f})", fontsize=10)
    axes[-1, 0].set_xlabel("query")
    return _save(fig, path)


def plot_precision_at_r(metrics_by_name, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, m in metrics_by_name.items():
        rs = sorted(int(r) for r in m["p_at"])
        ax.plot(rs, [m["p_at"][str(r)] for r in rs], marker="o", label=name)
    ax.set_xlabel("rank r")
    ax.set_ylabel("mean precision at r")
    ax.legend(fontsize=8, frameon=False)
    return _save(fig, path)


def plot_distance_matrix(table, path, title="distances"):
    v = np.where(np.isfinite(table.values), table.values, np.nan)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(v, cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_xlabel("candidate")
    ax.set_ylabel("query")
    ax.set_title(title, fontsize=10)
    return _save(fig, path)


def plot_friedman(mean_ranks, statistic, path):
    names = list(mean_ranks)
    fig, ax = plt.subplots(figsize=(5, 0.5 * len(names) + 1.5))
    ax.barh(names, [mean_ranks[n] for n in names], color="0.55")
    ax.set_xlabel("mean rank (higher is better)")
    ax.set_title(f"Friedman chi2 = {statistic:.3f}", fontsize=10)
    return _save(fig, path)
