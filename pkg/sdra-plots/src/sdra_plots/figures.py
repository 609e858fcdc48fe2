"""Figure builders: strict readers of the experiment CSV schemas.

Four figure kinds, one per experiment output:

- ``curves``: mean infected fraction against time per strategy, with a
  one-standard-error band (``summary_curves.csv``).
- ``score-hist``: score distribution of the sampled infected nodes at
  an early, a middle, and a late round, overlaid (``scores_*.csv``).
  Bins follow the Freedman-Diaconis rule per round.
- ``regression``: excess-infection area against selection-divergence
  area, one point per strategy, with the fitted line stored in the CSV
  drawn per sampling ratio. The fit coefficients are printed to three
  decimals exactly as stored (``regression.csv``).
- ``auc-alpha``: infection area under curve against sampling ratio,
  grouped by network kind and mean degree (``sweep_alpha.csv``).

Rendering never recomputes a simulated quantity; every number drawn or
printed comes from the input CSV. Equal inputs give equal figures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, Table, read_table

__all__ = ["KINDS", "PlotSpec", "build_figure", "plot"]

KINDS = ("curves", "score-hist", "regression", "auc-alpha")


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input CSV, figure kind, output image path."""

    kind: str
    csv: Path | str
    out: Path | str
    title: str = ""
    rounds: tuple[int, ...] = field(default=())
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if self.rounds and self.kind != "score-hist":
            raise ValueError("rounds selection only applies to score-hist")
        if self.alpha is not None and self.kind != "regression":
            raise ValueError("alpha filter only applies to regression")


def plot(spec: PlotSpec) -> Path:
    """Render the figure and return the written image path.

    Printed output (the regression fit lines) goes to stdout after a
    successful save, so a failed render never prints partial results.
    """
    fig, printed = build_figure(spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    for line in printed:
        print(line)
    return out


def build_figure(spec: PlotSpec):
    """Build the matplotlib figure for one PlotSpec.

    Returns:
        (figure, lines to print after saving).
    """
    if spec.kind == "curves":
        return _curves(spec)
    if spec.kind == "score-hist":
        return _score_hist(spec)
    if spec.kind == "regression":
        return _regression(spec)
    return _auc_alpha(spec)


def _finish(fig, ax, spec: PlotSpec, default_title: str) -> None:
    ax.set_title(spec.title or default_title)
    fig.tight_layout()


def _curves(spec: PlotSpec):
    table = read_table(spec.csv, required=("strategy", "t", "eta_mean", "eta_sem"))
    strategies = table.unique("strategy")
    names = table.strings("strategy")
    t = table.floats("t")
    mean = table.floats("eta_mean")
    sem = table.floats("eta_sem")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name in strategies:
        sel = np.array([n == name for n in names])
        order = np.argsort(t[sel], kind="stable")
        ts, ms, ss = t[sel][order], mean[sel][order], sem[sel][order]
        ax.plot(ts, ms, linewidth=1.6, label=name)
        ax.fill_between(ts, ms - ss, ms + ss, alpha=0.25, linewidth=0)
    ax.set_xlabel("time")
    ax.set_ylabel("infected fraction")
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    _finish(fig, ax, spec, "infected fraction, mean and standard error")
    return fig, []


def _pick_rounds(available: list[int], requested: tuple[int, ...]) -> list[int]:
    """Requested rounds, or the first, middle, and last available."""
    if requested:
        missing = [k for k in requested if k not in available]
        if missing:
            raise SchemaError(
                f"rounds {missing} not in the file; available {available}"
            )
        return list(dict.fromkeys(requested))
    picks = [available[0], available[len(available) // 2], available[-1]]
    return list(dict.fromkeys(picks))


def _score_hist(spec: PlotSpec):
    table = read_table(spec.csv, required=("round", "score"))
    rounds = table.floats("round").astype(np.int64)
    scores = table.floats("score")
    available = sorted(set(rounds.tolist()))
    picks = _pick_rounds(available, spec.rounds)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for k in picks:
        vals = scores[rounds == k]
        edges = np.histogram_bin_edges(vals, bins="fd")
        ax.hist(
            vals,
            bins=edges,
            density=True,
            histtype="stepfilled",
            alpha=0.45,
            label=f"round {k}",
        )
    ax.set_xlabel("score")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    _finish(fig, ax, spec, "sampled infected-node scores by round")
    return fig, []


def _regression(spec: PlotSpec):
    table = read_table(
        spec.csv, required=("strategy", "A_e", "A_dN", "c1", "c2", "r2", "alpha")
    )
    a_e = table.floats("A_e")
    a_dn = table.floats("A_dN")
    c1 = table.floats("c1")
    c2 = table.floats("c2")
    r2 = table.floats("r2")
    alphas = table.floats("alpha")
    strategies = table.strings("strategy")
    groups = list(dict.fromkeys(alphas.tolist()))
    if spec.alpha is not None:
        groups = [a for a in groups if np.isclose(a, spec.alpha)]
        if not groups:
            raise SchemaError(
                f"{table.path}: no rows with alpha={spec.alpha:g}"
            )
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    printed = []
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for gi, alpha in enumerate(groups):
        sel = np.isclose(alphas, alpha)
        color = colors[gi % len(colors)]
        ax.scatter(a_e[sel], a_dn[sel], s=28, color=color, zorder=3)
        for x, y, name, keep in zip(a_e, a_dn, strategies, sel):
            if keep:
                ax.annotate(
                    name, (x, y),
                    textcoords="offset points", xytext=(4, 4), fontsize=7,
                )
        gc1 = float(c1[sel][0])
        gc2 = float(c2[sel][0])
        gr2 = float(r2[sel][0])
        printed.append(
            f"alpha={alpha:g}: c1={gc1:.3f} c2={gc2:.3f} r2={gr2:.3f}"
        )
        if np.isfinite(gc1) and np.isfinite(gc2):
            xs = np.linspace(0.0, float(a_e[sel].max()) * 1.05, 64)
            ax.plot(
                xs, gc1 * xs + gc2,
                color=color, linewidth=1.2,
                label=f"alpha={alpha:g}: {gc1:.3f} x {gc2:+.3f}",
            )
    ax.set_xlabel("selection divergence area")
    ax.set_ylabel("excess infection area")
    ax.legend(frameon=False, fontsize=8)
    _finish(fig, ax, spec, "excess infection against selection divergence")
    return fig, printed


def _auc_alpha(spec: PlotSpec):
    table = read_table(
        spec.csv,
        required=("network", "kbar", "alpha", "auc_mean", "auc_sem", "seeds"),
    )
    networks = table.strings("network")
    kbars = table.floats("kbar")
    alphas = table.floats("alpha")
    means = table.floats("auc_mean")
    sems = table.floats("auc_sem")
    groups = list(dict.fromkeys(zip(networks, kbars.tolist())))
    alpha_levels = sorted(set(alphas.tolist()))
    width = 0.8 / len(groups)
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    base = np.arange(len(alpha_levels), dtype=np.float64)
    for gi, (net, kbar) in enumerate(groups):
        sel = np.array(
            [n == net and np.isclose(k, kbar) for n, k in zip(networks, kbars)]
        )
        by_alpha = {a: (m, s) for a, m, s in zip(alphas[sel], means[sel], sems[sel])}
        heights = [by_alpha.get(a, (np.nan, 0.0))[0] for a in alpha_levels]
        errs = [by_alpha.get(a, (np.nan, 0.0))[1] for a in alpha_levels]
        ax.bar(
            base + gi * width,
            heights,
            width=width,
            yerr=errs,
            capsize=2,
            label=f"{net} kbar={kbar:g}",
        )
    ax.set_xticks(base + (len(groups) - 1) * width / 2)
    ax.set_xticklabels([f"{a:g}" for a in alpha_levels])
    ax.set_xlabel("sampling ratio alpha")
    ax.set_ylabel("infection area under curve")
    ax.legend(frameon=False, fontsize=8)
    _finish(fig, ax, spec, "infection area against sampling ratio")
    return fig, []
