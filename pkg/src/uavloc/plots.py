"""Figure rendering for the report paths of the CLI.

Figures are optional companions to the delimited outputs (enabled with
--figures); everything here writes PNG files and never opens a window.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_sweep(curve, knee: int, path: str) -> None:
    """Z versus fleet size with the knee point marked."""
    ns = [n for n, _ in curve]
    zs = [z for _, z in curve]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ns, zs, marker="o", lw=1.5, color="tab:blue")
    if knee in ns:
        k = ns.index(knee)
        ax.axvline(knee, color="tab:red", ls="--", lw=1.0)
        ax.annotate(
            f"knee = {knee}",
            xy=(knee, zs[k]),
            xytext=(5, 10),
            textcoords="offset points",
            color="tab:red",
        )
    ax.set_xlabel("UAV fleet size")
    ax.set_ylabel("network uncertainty Z")
    ax.set_xticks(ns)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_traces(traces: dict[str, list], path: str) -> None:
    """Best/mean fitness per generation for one or more solver runs."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    colors = plt.cm.tab10.colors
    for k, (label, trace) in enumerate(sorted(traces.items())):
        gens = [g.generation for g in trace]
        best = [g.best_so_far for g in trace]
        mean = [g.mean for g in trace]
        std = [g.std for g in trace]
        c = colors[k % len(colors)]
        ax.plot(gens, best, color=c, lw=1.6, label=f"{label} best")
        ax.plot(gens, mean, color=c, lw=0.9, ls="--", alpha=0.7, label=f"{label} mean")
        ax.fill_between(
            gens,
            np.array(mean) - np.array(std),
            np.array(mean) + np.array(std),
            color=c,
            alpha=0.12,
        )
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness (-Z)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_compare(summaries, path: str) -> None:
    """Solver comparison bars: best Z, convergence, population diversity."""
    names = [s.solver for s in summaries]
    fig, axes = plt.subplots(1, 3, figsize=(9.5, 3.4))
    panels = [
        ("mean best Z", [s.mean_z for s in summaries], [s.std_z for s in summaries]),
        ("mean convergence generation", [s.mean_convergence for s in summaries], None),
        ("mean population fitness std", [s.mean_population_std for s in summaries], None),
    ]
    for ax, (title, values, err) in zip(axes, panels):
        ax.bar(names, values, yerr=err, capsize=3, color="tab:blue", alpha=0.8)
        ax.set_title(title, fontsize=9)
        ax.tick_params(labelsize=8)
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
