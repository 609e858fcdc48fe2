"""Warm-started sequential selection.

A selection round is a warm-started secretary-type problem: b resource
holders (the preselection) face a stream of n candidates revealed one
at a time, each decision immediate and irrevocable, and an accepted
candidate takes a resource from the current worst holder (or fills a
slot freed by a recovered holder). Online rules implemented here:

* hiring-above-the-mean: accept above the mean score of current holders;
* hiring-above-the-median: same with the (lower) median;
* CCM: reject a learning prefix of c candidates, store the b best
  scores seen (preselection included) in a reference set, then accept
  whenever a candidate beats the acceptance pointer, which starts at
  the worst reference score and moves up per accept.

The offline oracle simply keeps the b best of preselection plus
candidates. Cost is the offline score sum minus the achieved score sum;
quality is the mean normalized rank of the final selection inside the
round's score pool, and feeds the cutoff table c*(b, n, q) used by the
adaptive CCM variant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import inf

import numpy as np

__all__ = [
    "WsspInstance",
    "SelectionOutcome",
    "rank",
    "offline_select",
    "run_hiring_above_mean",
    "run_hiring_above_median",
    "run_ccm",
    "compute_cost",
    "compute_quality",
    "CutoffTable",
    "build_cutoff_table",
    "DEFAULT_N_GRID",
    "DEFAULT_Q_GRID",
]

DEFAULT_N_GRID = (5, 10, 15, 20, 30, 40, 50, 75, 100)
DEFAULT_Q_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

QUALITY_CLAMP = (0.01, 0.99)
MIN_TABLE_REPLICAS = 1000


def rank(s: float, pool) -> int:
    """Rank of a score in a pool: the count of pool entries <= s."""
    pool = np.asarray(pool)
    if pool.size == 0:
        raise ValueError("rank needs a nonempty pool")
    return int(np.count_nonzero(pool <= s))


@dataclass
class WsspInstance:
    """One selection round.

    ``budget`` is the effective resource capacity of the round (the
    global budget capped by the number of infected nodes). The
    preselection holds at most ``budget`` entries; missing entries are
    free resources assignable during the round. Candidates are listed
    in arrival order and are disjoint from the preselection.
    """

    budget: int
    pre_ids: np.ndarray
    pre_scores: np.ndarray
    cand_ids: np.ndarray
    cand_scores: np.ndarray

    def __post_init__(self) -> None:
        self.pre_ids = np.asarray(self.pre_ids, dtype=np.int64)
        self.pre_scores = np.asarray(self.pre_scores, dtype=np.float64)
        self.cand_ids = np.asarray(self.cand_ids, dtype=np.int64)
        self.cand_scores = np.asarray(self.cand_scores, dtype=np.float64)
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if len(self.pre_ids) > self.budget:
            raise ValueError("preselection larger than budget")
        if np.intersect1d(self.pre_ids, self.cand_ids).size:
            raise ValueError("candidates must be disjoint from preselection")

    @property
    def n(self) -> int:
        return len(self.cand_ids)

    def pool_ids(self) -> np.ndarray:
        return np.concatenate([self.pre_ids, self.cand_ids])

    def pool_scores(self) -> np.ndarray:
        return np.concatenate([self.pre_scores, self.cand_scores])


@dataclass
class SelectionOutcome:
    """Decisions of a sequential pass plus the resulting holder set."""

    decisions: np.ndarray
    holder_ids: list[int]
    holder_scores: list[float]
    free: int


class _HolderPool:
    """Holders during a pass; accepts fill free slots then evict."""

    def __init__(self, ids, scores, capacity: int) -> None:
        self.ids = [int(i) for i in ids]
        self.scores = [float(s) for s in scores]
        self.capacity = capacity

    @property
    def free(self) -> int:
        return self.capacity - len(self.ids)

    def _worst(self) -> int:
        # Lowest score; equal scores evict the higher id so the lowest
        # id survives.
        wi = 0
        ws, wid = self.scores[0], self.ids[0]
        for j in range(1, len(self.ids)):
            s, i = self.scores[j], self.ids[j]
            if s < ws or (s == ws and i > wid):
                wi, ws, wid = j, s, i
        return wi

    def place(self, node: int, score: float) -> None:
        if len(self.ids) < self.capacity:
            self.ids.append(node)
            self.scores.append(score)
        else:
            wi = self._worst()
            self.ids[wi] = node
            self.scores[wi] = score


def offline_select(instance: WsspInstance) -> np.ndarray:
    """The capacity-many best-scoring pool nodes, ties to the lowest id.

    Returns node ids sorted ascending.
    """
    ids = instance.pool_ids()
    scores = instance.pool_scores()
    cap = min(instance.budget, len(ids))
    if cap == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((ids, -scores))
    return np.sort(ids[order[:cap]])


def _sequential_pass(instance: WsspInstance, threshold_fn) -> SelectionOutcome:
    pool = _HolderPool(instance.pre_ids, instance.pre_scores, instance.budget)
    cand_ids = instance.cand_ids.tolist()
    cand_scores = instance.cand_scores.tolist()
    decisions = np.zeros(len(cand_ids), dtype=bool)
    for j, (node, s) in enumerate(zip(cand_ids, cand_scores)):
        if pool.capacity == 0:
            break
        if s > threshold_fn(pool):
            decisions[j] = True
            pool.place(node, s)
    return SelectionOutcome(
        decisions=decisions,
        holder_ids=pool.ids,
        holder_scores=pool.scores,
        free=pool.free,
    )


def run_hiring_above_mean(instance: WsspInstance) -> SelectionOutcome:
    """Accept a candidate iff it beats the mean of the current holders."""

    def threshold(pool: _HolderPool) -> float:
        if not pool.scores:
            return -inf
        return sum(pool.scores) / len(pool.scores)

    return _sequential_pass(instance, threshold)


def run_hiring_above_median(instance: WsspInstance) -> SelectionOutcome:
    """Accept a candidate iff it beats the (lower) median of holders."""

    def threshold(pool: _HolderPool) -> float:
        if not pool.scores:
            return -inf
        ordered = sorted(pool.scores)
        return ordered[(len(ordered) - 1) // 2]

    return _sequential_pass(instance, threshold)


def run_ccm(instance: WsspInstance, c: int) -> SelectionOutcome:
    """Cutoff-based rule with a warm-started reference set.

    The first c candidates are rejected unconditionally; the reference
    set holds the budget-many best scores among preselection and the
    learning prefix. Acceptance starts at the worst reference score and
    the pointer climbs one reference entry per accept (saturating at
    the best entry). Ties at the threshold are rejections.
    """
    n = instance.n
    if n == 0:
        return SelectionOutcome(
            decisions=np.zeros(0, dtype=bool),
            holder_ids=[int(i) for i in instance.pre_ids],
            holder_scores=[float(s) for s in instance.pre_scores],
            free=instance.budget - len(instance.pre_ids),
        )
    if not 0 <= c < n:
        raise ValueError(f"cutoff {c} outside [0, {n})")
    ref_pool = np.concatenate([instance.pre_scores, instance.cand_scores[:c]])
    if len(ref_pool) > instance.budget:
        ref = np.sort(ref_pool)[len(ref_pool) - instance.budget :].tolist()
    else:
        ref = np.sort(ref_pool).tolist()
    pool = _HolderPool(instance.pre_ids, instance.pre_scores, instance.budget)
    cand_ids = instance.cand_ids.tolist()
    cand_scores = instance.cand_scores.tolist()
    decisions = np.zeros(n, dtype=bool)
    ptr = 0
    last = len(ref) - 1
    for j in range(c, n):
        if pool.capacity == 0:
            break
        s = cand_scores[j]
        thr = ref[ptr if ptr < last else last] if ref else -inf
        if s > thr:
            decisions[j] = True
            ptr += 1
            pool.place(cand_ids[j], s)
    return SelectionOutcome(
        decisions=decisions,
        holder_ids=pool.ids,
        holder_scores=pool.scores,
        free=pool.free,
    )


def compute_cost(instance: WsspInstance, selected_ids) -> float:
    """Offline score sum minus the achieved score sum (nonnegative)."""
    ids = instance.pool_ids()
    scores = instance.pool_scores()
    lut = dict(zip(ids.tolist(), scores.tolist()))
    try:
        achieved = sum(lut[int(i)] for i in selected_ids)
    except KeyError as exc:
        raise ValueError(f"selected node {exc} outside the round pool") from exc
    offline = sum(lut[int(i)] for i in offline_select(instance))
    return float(offline - achieved)


def compute_quality(instance: WsspInstance, selected_ids) -> float:
    """Normalized rank sum of the still-selected nodes over the budget.

    Each node's rank inside the round pool counts ties inclusively and
    is divided by the pool size; the per-node values are summed and
    divided by the instance budget, so a full budget-sized selection
    yields its mean normalized rank while departed holders discount the
    total. The result is clamped to [0.01, 0.99] before being used as
    a table key; an empty selection (every incumbent departed) sits at
    the bottom clamp.
    """
    selected_ids = [int(i) for i in selected_ids]
    if not selected_ids:
        return QUALITY_CLAMP[0]
    ids = instance.pool_ids()
    scores = instance.pool_scores()
    lut = dict(zip(ids.tolist(), scores.tolist()))
    sel_scores = np.array([lut[i] for i in selected_ids])
    ordered = np.sort(scores)
    ranks = np.searchsorted(ordered, sel_scores, side="right")
    q = float(ranks.sum()) / len(ordered) / max(instance.budget, 1)
    return float(min(max(q, QUALITY_CLAMP[0]), QUALITY_CLAMP[1]))


# ---------------------------------------------------------------------------
# Cutoff table
# ---------------------------------------------------------------------------


@dataclass
class CutoffTable:
    """Optimal learning-phase lengths c*(b, n, q) on a bucket grid."""

    budget: int
    n_grid: np.ndarray
    q_grid: np.ndarray
    c_star: np.ndarray
    est_cost: np.ndarray
    replicas: int
    seed: int

    def lookup(self, n: int, q: float) -> int:
        """Nearest-cell cutoff, clamped into [0, n)."""
        if n <= 0:
            return 0
        ni = int(np.argmin(np.abs(self.n_grid - n)))
        qi = int(np.argmin(np.abs(self.q_grid - q)))
        return int(min(max(self.c_star[ni, qi], 0), n - 1))

    def save_csv(self, path, header_lines=()) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(
                ["b", "n", "q_bucket", "c_star", "est_cost", "replicas", "seed"]
            )
            for ni, n in enumerate(self.n_grid):
                for qi, q in enumerate(self.q_grid):
                    writer.writerow(
                        [
                            self.budget,
                            int(n),
                            f"{float(q):.6g}",
                            int(self.c_star[ni, qi]),
                            f"{float(self.est_cost[ni, qi]):.6g}",
                            self.replicas,
                            self.seed,
                        ]
                    )

    @classmethod
    def load_csv(cls, path) -> "CutoffTable":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or not line.strip():
                    continue
                rows.append(line.strip())
        reader = csv.DictReader(rows)
        cells: dict[tuple[int, float], tuple[int, float]] = {}
        budget = replicas = seed = None
        for rec in reader:
            budget = int(rec["b"])
            replicas = int(rec["replicas"])
            seed = int(rec["seed"])
            cells[(int(rec["n"]), float(rec["q_bucket"]))] = (
                int(rec["c_star"]),
                float(rec["est_cost"]),
            )
        if not cells:
            raise ValueError(f"{path}: empty cutoff table")
        n_grid = np.array(sorted({k[0] for k in cells}), dtype=np.int64)
        q_grid = np.array(sorted({k[1] for k in cells}), dtype=np.float64)
        c_star = np.zeros((len(n_grid), len(q_grid)), dtype=np.int64)
        est = np.zeros_like(c_star, dtype=np.float64)
        for ni, n in enumerate(n_grid):
            for qi, q in enumerate(q_grid):
                if (int(n), float(q)) not in cells:
                    raise ValueError(f"{path}: missing cell (n={n}, q={q})")
                c_star[ni, qi], est[ni, qi] = cells[(int(n), float(q))]
        return cls(
            budget=budget,
            n_grid=n_grid,
            q_grid=q_grid,
            c_star=c_star,
            est_cost=est,
            replicas=replicas,
            seed=seed,
        )


def _cell_cost_curve(
    budget: int, n: int, q: float, replicas: int, rng: np.random.Generator
) -> np.ndarray:
    """Monte Carlo expected rank cost of every cutoff for one (n, q) cell.

    Candidate scores are uniform(0,1); preselection scores sit in a
    +/-0.05 neighborhood of q. The simulated process is the rank-cost
    law the table is calibrated against: after the learning phase each
    arriving candidate is accepted when it beats the next rung of the
    reference ladder (the best ``b`` scores seen before the phase
    ended), every acceptance is irrevocable and withdraws the worst
    still-preselected node, and acceptances stop once all ``b``
    resources have moved. Cost is the offline top-b rank sum minus the
    rank sum of the final allocation, so it is nonnegative.
    """
    b = budget
    cand = rng.random((replicas, n))
    pre = np.clip(q + (rng.random((replicas, b)) - 0.5) * 0.1, 1e-3, 1.0 - 1e-3)
    pool = np.concatenate([pre, cand], axis=1)
    off_sum = b * (n + b) - b * (b - 1) // 2
    rows = np.arange(replicas)

    # Ranks count pool entries <= the score, matching compute_cost.
    pre_ranks = (pool[:, None, :] <= pre[:, :, None]).sum(axis=2)
    cand_ranks = np.empty((replicas, n), dtype=np.int64)
    step = max(1, 2_000_000 // (replicas * (n + b)) + 1)
    for j0 in range(0, n, step):
        j1 = min(n, j0 + step)
        cand_ranks[:, j0:j1] = (pool[:, None, :] <= cand[:, j0:j1, None]).sum(axis=2)

    pre_order = np.argsort(pre, axis=1)
    pre_sorted = np.take_along_axis(pre, pre_order, axis=1)
    pre_ranks_sorted = np.take_along_axis(pre_ranks, pre_order, axis=1)
    # suffix[:, a] = rank sum of the preselected nodes still holding a
    # resource after the a worst of them were withdrawn
    suffix = np.zeros((replicas, b + 1), dtype=np.float64)
    suffix[:, :b] = np.cumsum(pre_ranks_sorted[:, ::-1], axis=1)[:, ::-1]

    ref = pre_sorted.copy()
    costs = np.empty(n, dtype=np.float64)
    for c in range(n):
        accepts = np.zeros(replicas, dtype=np.int64)
        acc_ranks = np.zeros(replicas, dtype=np.float64)
        for j in range(c, n):
            s = cand[:, j]
            thr = ref[rows, np.minimum(accepts, b - 1)]
            hit = np.flatnonzero((s > thr) & (accepts < b))
            if hit.size:
                acc_ranks[hit] += cand_ranks[hit, j]
                accepts[hit] += 1
        costs[c] = off_sum - (acc_ranks + suffix[rows, accepts]).mean()
        new = cand[:, c]
        better = np.flatnonzero(new > ref[:, 0])
        if better.size:
            ref[better, 0] = new[better]
            ref[better] = np.sort(ref[better], axis=1)
    return costs


def _smooth3(costs: np.ndarray) -> np.ndarray:
    kernel = np.ones(3)
    sums = np.convolve(costs, kernel, mode="same")
    counts = np.convolve(np.ones_like(costs), kernel, mode="same")
    return sums / counts


def build_cutoff_table(
    budget: int,
    n_grid=DEFAULT_N_GRID,
    q_grid=DEFAULT_Q_GRID,
    replicas: int = 2000,
    seed: int = 0,
) -> CutoffTable:
    """Estimate c*(b, n, q) by Monte Carlo over synthetic instances.

    For each cell the expected rank-based cost is estimated for every
    cutoff c in [0, n), smoothed with a 3-point moving average, and the
    argmin stored. Each cell draws from an independently derived seed,
    so cells can be computed in any order (or in parallel) without
    changing the table.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if replicas < MIN_TABLE_REPLICAS:
        raise ValueError(f"insufficient replicas: need >= {MIN_TABLE_REPLICAS}")
    n_grid = np.asarray(sorted(int(n) for n in n_grid), dtype=np.int64)
    q_grid = np.asarray(sorted(float(q) for q in q_grid), dtype=np.float64)
    if len(n_grid) == 0 or len(q_grid) == 0 or n_grid[0] < 1:
        raise ValueError("grids must be nonempty with positive n")
    c_star = np.zeros((len(n_grid), len(q_grid)), dtype=np.int64)
    est = np.zeros_like(c_star, dtype=np.float64)
    for ni, n in enumerate(n_grid):
        for qi, q in enumerate(q_grid):
            rng = np.random.default_rng(
                np.random.SeedSequence([int(seed), int(ni), int(qi)])
            )
            curve = _smooth3(_cell_cost_curve(budget, int(n), float(q), replicas, rng))
            c_star[ni, qi] = int(np.argmin(curve))
            est[ni, qi] = float(curve[c_star[ni, qi]])
    return CutoffTable(
        budget=budget,
        n_grid=n_grid,
        q_grid=q_grid,
        c_star=c_star,
        est_cost=est,
        replicas=replicas,
        seed=seed,
    )
