"""Evaluation of controlled epidemic runs.

AUC of the infection level, per-round online selection error against
the offline oracle, paired online/offline runs on common random
numbers, the affine regression linking error accumulation to excess
infection, extinction times, and the RunRecord CSV format.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RunRecord",
    "RegressionFit",
    "auc_infection",
    "online_error",
    "extinction_time",
    "paired_offline_run",
    "fit_regression",
    "error_auc",
    "excess_infection_auc",
    "paired_error_series",
    "paired_error_auc",
    "write_run_csv",
    "read_run_csv",
]


@dataclass
class RunRecord:
    """One simulation run.

    ``times[0]`` is 0 with the initial infected count; each later entry
    is an applied event. Round k's stats describe the reallocation that
    immediately preceded event k, so the stat arrays have one entry per
    event (and stay empty for budget-zero runs).
    """

    times: np.ndarray
    counts: np.ndarray
    errors: np.ndarray
    costs: np.ndarray
    qualities: np.ndarray
    extinction: float | None
    seed: int
    digest: str = ""
    n_nodes: int = 0
    allocations: list | None = None

    def __post_init__(self) -> None:
        if len(self.times) != len(self.counts):
            raise ValueError("times and counts must align")
        if len(self.times) == 0:
            raise ValueError("empty record")
        if self.n_nodes <= 0:
            self.n_nodes = int(self.counts.max(initial=1))


@dataclass
class RegressionFit:
    """Affine fit of excess-infection AUC against error AUC."""

    c1: float
    c2: float
    r2: float
    alpha: float
    points: list = field(default_factory=list)
    degenerate: bool = False


def auc_infection(record: RunRecord, T: float) -> float:
    """Exact integral of the infected fraction over [0, T].

    The trajectory is piecewise constant between events and extends
    flat past the last event (zero forever once extinct).
    """
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    ts = np.minimum(record.times, T)
    bounds = np.append(ts, T)
    widths = np.maximum(np.diff(bounds), 0.0)
    return float((record.counts * widths).sum() / record.n_nodes)


def online_error(online_alloc, offline_alloc) -> float:
    """Half the L1 distance between two same-budget allocations."""
    a = np.asarray(online_alloc)
    b = np.asarray(offline_alloc)
    if a.shape != b.shape:
        raise ValueError("allocation vectors must share a shape")
    if int(a.sum()) != int(b.sum()):
        raise ValueError("allocations must place the same number of resources")
    return float(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum()) / 2.0


def extinction_time(record: RunRecord) -> float | None:
    """First event time with zero infected, or None within the record."""
    if record.extinction is not None:
        return record.extinction
    idx = np.flatnonzero(record.counts == 0)
    if idx.size == 0:
        return None
    return float(record.times[idx[0]])


def error_auc(record: RunRecord, budget: int) -> float:
    """Round-summed normalized selection error sum_k eps_k / b."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    return float(record.errors.sum() / budget)


def paired_error_series(online: RunRecord, offline: RunRecord) -> np.ndarray:
    """Per-round placement mismatch between two paired trajectories.

    Round k's value is half the symmetric difference between the two
    runs' post-round resource-holder sets, i.e. the number of
    misplaced resources counting each swap once. Rounds past the
    shorter run compare against an empty allocation, so once one arm
    is extinct each extra round contributes half the live arm's
    placement count. Requires both records to carry allocations
    (collected by :func:`paired_offline_run`).
    """
    if online.allocations is None or offline.allocations is None:
        raise ValueError("both records must carry per-round allocations")
    on = online.allocations
    off = offline.allocations
    k = max(len(on), len(off))
    empty = np.empty(0, dtype=np.int64)
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        a = on[i] if i < len(on) else empty
        b = off[i] if i < len(off) else empty
        shared = np.intersect1d(a, b, assume_unique=True).size
        out[i] = (len(a) + len(b) - 2 * shared) / 2.0
    return out


def paired_error_auc(online: RunRecord, offline: RunRecord, budget: int) -> float:
    """Round-summed paired placement mismatch over the budget.

    The divergence analogue of :func:`error_auc`: instead of scoring a
    round against its own within-sample oracle, it counts how far the
    realized allocation drifted from the offline twin's allocation at
    the same round index, normalized by the budget.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    return float(paired_error_series(online, offline).sum() / budget)


def excess_infection_auc(
    online: RunRecord, offline: RunRecord, *, max_rounds: int | None = None
) -> float:
    """Round-indexed sum of the paired infected-count gap over N.

    Aligns the two runs by round index (one round per event), extending
    the shorter run flat at its final count (zero when extinct), and
    sums (N_online_k - N_offline_k) / N over rounds 1..K. ``max_rounds``
    truncates K; by default K is the longer run's round count.
    """
    n = online.n_nodes
    if offline.n_nodes != n:
        raise ValueError("paired runs must share a network size")
    on = online.counts[1:]
    off = offline.counts[1:]
    k = max(len(on), len(off))
    if max_rounds is not None:
        k = min(k, max_rounds)

    def extended(counts: np.ndarray, record: RunRecord) -> np.ndarray:
        if len(counts) >= k:
            return counts[:k]
        tail_value = 0 if record.extinction is not None else int(
            record.counts[-1]
        )
        tail = np.full(k - len(counts), tail_value, dtype=counts.dtype)
        return np.concatenate([counts, tail])

    gap = extended(on, online).astype(np.float64) - extended(off, offline)
    return float(gap.sum() / n)


def paired_offline_run(
    graph,
    params,
    strategy,
    sampler,
    *,
    horizon: float,
    seed: int,
    offline_strategy=None,
    **run_kwargs,
):
    """Run a strategy and its offline twin on common random numbers.

    The offline twin is the batch (RDRA) allocator with the same scorer
    and the same random streams. Returns (online record, offline
    record, per-round shadow error series); the shadow series compares
    each online round's final allocation with the offline oracle on
    that round's own inputs, so it is meaningful even after the two
    trajectories diverge. Both records carry per-round allocations, so
    the divergence-based series from :func:`paired_error_series` is
    available as well.
    """
    from .control import StrategyConfig, run_simulation

    if offline_strategy is None:
        offline_strategy = StrategyConfig(
            name=f"{strategy.name}-offline",
            family="rdra",
            scorer=strategy.scorer,
        )
    online = run_simulation(
        graph,
        params,
        strategy,
        sampler,
        horizon=horizon,
        seed=seed,
        shadow=True,
        collect_allocations=True,
        **run_kwargs,
    )
    offline = run_simulation(
        graph,
        params,
        offline_strategy,
        sampler,
        horizon=horizon,
        seed=seed,
        shadow=False,
        collect_allocations=True,
        **run_kwargs,
    )
    return online, offline, online.errors


def fit_regression(points, alpha: float = float("nan")) -> RegressionFit:
    """Ordinary least squares over (error AUC, excess AUC) points.

    ``points`` is a sequence of (x, y) pairs, one per strategy. A fit
    over x values with (numerically) zero spread is flagged degenerate
    instead of crashing.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if float(np.var(x)) < 1e-12:
        return RegressionFit(
            c1=float("nan"),
            c2=float("nan"),
            r2=float("nan"),
            alpha=alpha,
            points=pts,
            degenerate=True,
        )
    c1, c2 = np.polyfit(x, y, deg=1)
    resid = y - (c1 * x + c2)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if sst == 0.0 else 1.0 - float((resid**2).sum()) / sst
    return RegressionFit(
        c1=float(c1), c2=float(c2), r2=r2, alpha=alpha, points=pts
    )


def write_run_csv(record: RunRecord, path, header_lines=()) -> None:
    """Write a record as CSV with one '#' provenance line per header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# nodes={record.n_nodes} seed={record.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "n_infected", "round", "epsilon", "cost", "quality"])
        writer.writerow([_fmt(record.times[0]), int(record.counts[0]), 0, "", "", ""])
        have_stats = len(record.errors) > 0
        for k in range(1, len(record.times)):
            if have_stats:
                writer.writerow(
                    [
                        _fmt(record.times[k]),
                        int(record.counts[k]),
                        k,
                        _fmt(record.errors[k - 1]),
                        _fmt(record.costs[k - 1]),
                        _fmt(record.qualities[k - 1]),
                    ]
                )
            else:
                writer.writerow(
                    [_fmt(record.times[k]), int(record.counts[k]), k, "", "", ""]
                )


def read_run_csv(path) -> RunRecord:
    """Read a record written by :func:`write_run_csv`."""
    digest = ""
    n_nodes = 0
    seed = -1
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("config="):
                        digest = token[len("config="):]
                    elif token.startswith("nodes="):
                        n_nodes = int(token[len("nodes="):])
                    elif token.startswith("seed="):
                        seed = int(token[len("seed="):])
                continue
            if line.strip():
                rows.append(line.strip())
    reader = csv.DictReader(rows)
    times, counts, errors, costs, quals = [], [], [], [], []
    for rec in reader:
        times.append(float(rec["t"]))
        counts.append(int(rec["n_infected"]))
        if rec["epsilon"] != "":
            errors.append(float(rec["epsilon"]))
            costs.append(float(rec["cost"]))
            quals.append(float(rec["quality"]))
    counts_arr = np.asarray(counts, dtype=np.int64)
    extinct = None
    zero = np.flatnonzero(counts_arr == 0)
    if zero.size:
        extinct = float(times[zero[0]])
    return RunRecord(
        times=np.asarray(times, dtype=np.float64),
        counts=counts_arr,
        errors=np.asarray(errors, dtype=np.float64),
        costs=np.asarray(costs, dtype=np.float64),
        qualities=np.asarray(quals, dtype=np.float64),
        extinction=extinct,
        seed=seed,
        digest=digest,
        n_nodes=n_nodes,
    )


def _fmt(x: float) -> str:
    return repr(float(x))
