"""The resource-allocation round loop.

A round is triggered by every change of the infection state. Each round
warm-starts from the currently treated, still-infected nodes, samples a
set of untreated infected candidates, scores everybody involved, and
reallocates the treatment budget either all at once from the full
sample (batch families DRA and RDRA, equal to the offline oracle on the
round pool) or by irrevocable per-candidate decisions in a uniformly
random arrival order (SDRA with an online hiring rule).

Random draws are split across dedicated streams (epidemic events,
candidate sampling, arrival permutations, score noise, initial
conditions) so strategies compared under a shared seed see identical
epidemic randomness; only the streams a strategy actually consumes
differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import e as EULER_E
from math import floor, sqrt

import numpy as np

from . import metrics
from .epidemic import (
    EpidemicParams,
    NoActiveTransitions,
    apply_event,
    initial_state,
    sample_next_event,
)
from .graphs import Graph
from .scoring import PriorityPlan, make_scorer
from .selection import (
    CutoffTable,
    WsspInstance,
    compute_cost,
    compute_quality,
    offline_select,
    run_ccm,
    run_hiring_above_mean,
    run_hiring_above_median,
)

__all__ = [
    "SamplerConfig",
    "StrategyConfig",
    "RoundStats",
    "trigger_round",
    "draw_sample",
    "warm_start",
    "run_rdra_round",
    "run_sdra_round",
    "initialize_allocation",
    "run_simulation",
]

FAMILIES = ("dra", "rdra", "sdra")
ALGOS = ("ccm", "mean", "median")
SCORERS = ("lrie", "mcm", "lrsr", "rand")


@dataclass
class SamplerConfig:
    """Candidate sampling rule.

    ``alpha`` scales the sample size; with ``size_mode`` "proportional"
    the round samples floor(alpha * N_infected) nodes, with "fixed" it
    samples floor(alpha * N) capped by availability. ``mode`` "uniform"
    draws uniformly among untreated infected nodes, "softmax" weights
    them by exp(score).
    """

    alpha: float = 0.5
    mode: str = "uniform"
    size_mode: str = "proportional"

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.mode not in ("uniform", "softmax"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.size_mode not in ("proportional", "fixed"):
            raise ValueError(f"unknown size mode {self.size_mode!r}")


@dataclass
class StrategyConfig:
    """One allocation strategy.

    ``family``: "dra" (batch, full information: the sample is every
    untreated infected node), "rdra" (batch over the restricted
    sample), or "sdra" (sequential decisions over the sample).
    ``algo`` picks the SDRA hiring rule; ``cutoff`` picks the CCM
    learning-phase length: "table" (adaptive c*(b, n, q)), "sqrt"
    (sqrt(n) - 1), "inve" (n/e), or an explicit integer.
    """

    name: str
    family: str
    scorer: str = "lrie"
    algo: str | None = None
    cutoff: str | int = "table"
    alpha: float | None = None

    def __post_init__(self) -> None:
        self.family = self.family.lower()
        self.scorer = self.scorer.lower()
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValueError("strategy alpha override must lie in (0, 1]")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.family == "sdra":
            if self.algo is None:
                raise ValueError("sdra strategies need an online algo")
            self.algo = self.algo.lower()
            if self.algo not in ALGOS:
                raise ValueError(f"unknown online algo {self.algo!r}")
        elif self.algo is not None:
            raise ValueError("online algo is only meaningful for sdra")
        if isinstance(self.cutoff, str):
            if self.cutoff not in ("table", "sqrt", "inve"):
                raise ValueError(f"unknown cutoff source {self.cutoff!r}")
        elif int(self.cutoff) < 0:
            raise ValueError("explicit cutoff must be nonnegative")


@dataclass
class RoundStats:
    """Outcome of one reallocation round."""

    n_sampled: int
    cost: float
    error: float
    quality: float
    instance: WsspInstance | None = None


def trigger_round(state) -> bool:
    """Passive trigger: every state change starts a round."""
    return True


def warm_start(state) -> np.ndarray:
    """Preselection: currently treated (hence still infected) nodes."""
    return np.flatnonzero(state.r == 1).astype(np.int64)


def draw_sample(
    state,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    scorer=None,
) -> np.ndarray:
    """Draw the round's candidates among untreated infected nodes.

    Returns node ids sorted ascending (the arrival order is a separate
    draw). An empty array turns the round into a no-op.
    """
    eligible = np.flatnonzero((state.x == 1) & (state.r == 0))
    if cfg.size_mode == "proportional":
        want = floor(cfg.alpha * state.n_infected)
    else:
        want = floor(cfg.alpha * state.graph.n)
    size = min(want, len(eligible))
    if size <= 0:
        return np.empty(0, dtype=np.int64)
    if cfg.mode == "uniform":
        picked = rng.choice(eligible, size=size, replace=False)
    else:
        if scorer is None:
            raise ValueError("softmax sampling requires a scorer")
        s = scorer.scores(state, eligible)
        w = np.exp(s - s.max())
        picked = rng.choice(eligible, size=size, replace=False, p=w / w.sum())
    return np.sort(picked).astype(np.int64)


def _apply_allocation(state, ids) -> None:
    state.r[:] = 0
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size:
        state.r[ids] = 1
    state.treated = int(ids.size)


def _resolve_cutoff(
    strategy: StrategyConfig, n: int, quality: float, table: CutoffTable | None
) -> int:
    if isinstance(strategy.cutoff, str):
        if strategy.cutoff == "table":
            if table is None:
                raise ValueError("cutoff source 'table' needs a cutoff table")
            return table.lookup(n, quality)
        if strategy.cutoff == "sqrt":
            c = floor(sqrt(n) - 1.0)
        else:  # inve
            c = floor(n / EULER_E)
    else:
        c = int(strategy.cutoff)
    return int(min(max(c, 0), n - 1))


def _round_instance(state, params, sample, scorer):
    holders = warm_start(state)
    budget_eff = min(params.budget, state.n_infected)
    pool_ids = np.concatenate([holders, sample])
    scores = scorer.scores(state, pool_ids)
    h = len(holders)
    return WsspInstance(
        budget=budget_eff,
        pre_ids=holders,
        pre_scores=scores[:h],
        cand_ids=sample,
        cand_scores=scores[h:],
    )


def run_rdra_round(state, params, sample, scorer) -> RoundStats:
    """Batch reallocation: the round pool's best nodes take the budget."""
    if len(sample) == 0:
        return RoundStats(n_sampled=0, cost=0.0, error=0.0, quality=float("nan"))
    instance = _round_instance(state, params, sample, scorer)
    selected = offline_select(instance)
    _apply_allocation(state, selected)
    return RoundStats(
        n_sampled=len(sample),
        cost=0.0,
        error=0.0,
        quality=compute_quality(instance, selected),
        instance=instance,
    )


def run_sdra_round(
    state,
    params,
    sample,
    scorer,
    strategy: StrategyConfig,
    arrival_rng: np.random.Generator,
    cutoff_table: CutoffTable | None,
    prev_quality: float,
    shadow: bool = True,
) -> RoundStats:
    """Sequential reallocation over a random arrival of the sample.

    Leftover free resources after the last candidate go to the latest
    candidates in reverse arrival order. When ``shadow`` is set, the
    final allocation is compared against the offline oracle on the same
    round inputs to produce the per-round selection error.
    """
    if len(sample) == 0:
        return RoundStats(n_sampled=0, cost=0.0, error=0.0, quality=float("nan"))
    perm = arrival_rng.permutation(len(sample))
    instance = _round_instance(state, params, sample, scorer)
    instance = WsspInstance(
        budget=instance.budget,
        pre_ids=instance.pre_ids,
        pre_scores=instance.pre_scores,
        cand_ids=instance.cand_ids[perm],
        cand_scores=instance.cand_scores[perm],
    )
    if strategy.algo == "mean":
        outcome = run_hiring_above_mean(instance)
    elif strategy.algo == "median":
        outcome = run_hiring_above_median(instance)
    else:
        c = _resolve_cutoff(strategy, instance.n, prev_quality, cutoff_table)
        outcome = run_ccm(instance, c)
    final_ids = list(outcome.holder_ids)
    free = outcome.free
    if free > 0:
        holding = set(final_ids)
        for node in instance.cand_ids[::-1].tolist():
            if free == 0:
                break
            if node not in holding:
                final_ids.append(node)
                holding.add(node)
                free -= 1
    _apply_allocation(state, final_ids)
    error = 0.0
    cost = 0.0
    if shadow:
        off = offline_select(instance)
        error = float(np.setdiff1d(final_ids, off).size)
        cost = compute_cost(instance, final_ids)
    return RoundStats(
        n_sampled=len(sample),
        cost=cost,
        error=error,
        quality=compute_quality(instance, final_ids),
        instance=instance,
    )


def initialize_allocation(state, params, rng: np.random.Generator) -> None:
    """Place the budget on uniformly random infected nodes."""
    if params.budget == 0 or state.n_infected == 0:
        return
    infected = np.flatnonzero(state.x == 1)
    k = min(params.budget, len(infected))
    ids = rng.choice(infected, size=k, replace=False)
    _apply_allocation(state, ids)


def _make_streams(seed: int):
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(5)
    return tuple(np.random.default_rng(k) for k in kids)


def resolve_initial_infection(graph: Graph, init, rng: np.random.Generator):
    """Initial infected ids from "full", a fraction, or an id list."""
    if isinstance(init, str):
        if init != "full":
            raise ValueError(f"unknown initial infection {init!r}")
        return "full"
    if isinstance(init, float):
        if not 0.0 < init <= 1.0:
            raise ValueError("initial infection fraction must lie in (0, 1]")
        k = max(1, round(init * graph.n))
        return rng.choice(graph.n, size=k, replace=False)
    return np.asarray(list(init), dtype=np.int64)


def run_simulation(
    graph: Graph,
    params: EpidemicParams,
    strategy: StrategyConfig,
    sampler: SamplerConfig,
    *,
    horizon: float,
    seed: int,
    init="full",
    max_rounds: int = 1_000_000,
    cutoff_table: CutoffTable | None = None,
    plan: PriorityPlan | None = None,
    shadow: bool = True,
    snapshot_every: int = 0,
    snapshots: list | None = None,
    collect_allocations: bool = False,
    digest: str = "",
) -> "metrics.RunRecord":
    """Run one controlled epidemic to extinction, horizon, or round cap.

    Returns a :class:`~sdra.metrics.RunRecord`. Rounds and events are
    aligned one to one: round k reallocates resources immediately
    before event k fires. With a zero budget the round machinery is
    skipped and the per-round stat arrays stay empty.

    When ``snapshots`` is a list and ``snapshot_every`` > 0, tuples of
    (round index, scores of infected nodes) are appended at round 1 and
    every ``snapshot_every`` rounds after it. With
    ``collect_allocations`` the record keeps each round's post-round
    resource-holder ids, aligned with the stat arrays.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    ep_rng, samp_rng, arr_rng, scr_rng, init_rng = _make_streams(seed)
    state = initial_state(graph, resolve_initial_infection(graph, init, init_rng))
    initialize_allocation(state, params, init_rng)
    scorer = make_scorer(strategy.scorer, graph, rng=scr_rng, plan=plan)
    sdra = strategy.family == "sdra"
    full_info = strategy.family == "dra"
    full_sampler = SamplerConfig(
        alpha=1.0, mode="uniform", size_mode="proportional"
    )
    times = [0.0]
    counts = [state.n_infected]
    errors: list[float] = []
    costs: list[float] = []
    quals: list[float] = []
    allocations: list | None = [] if collect_allocations else None
    prev_instance = None
    extinct: float | None = None
    rounds = 0
    while state.t < horizon and state.n_infected > 0 and rounds < max_rounds:
        rounds += 1
        had_round = False
        if params.budget > 0:
            state.round_index = rounds
            # warm-start quality must be read before the round moves any
            # resources: survivors ranked in the previous round's pool
            if prev_instance is None:
                q_round = 0.5
            else:
                q_round = compute_quality(prev_instance, warm_start(state))
            sample = draw_sample(
                state,
                full_sampler if full_info else sampler,
                samp_rng,
                scorer=scorer,
            )
            if snapshots is not None and snapshot_every > 0 and (
                rounds == 1 or rounds % snapshot_every == 0
            ):
                infected = np.flatnonzero(state.x == 1)
                snap_scorer = scorer
                if strategy.scorer == "rand":
                    snap_scorer = make_scorer(
                        "rand", graph, rng=np.random.default_rng(seed)
                    )
                snapshots.append((rounds, snap_scorer.scores(state, infected)))
            if sdra:
                stats = run_sdra_round(
                    state,
                    params,
                    sample,
                    scorer,
                    strategy,
                    arr_rng,
                    cutoff_table,
                    q_round,
                    shadow=shadow,
                )
            else:
                stats = run_rdra_round(state, params, sample, scorer)
            errors.append(stats.error)
            costs.append(stats.cost)
            quals.append(q_round)
            if allocations is not None:
                allocations.append(np.flatnonzero(state.r == 1))
            if stats.n_sampled > 0:
                prev_instance = stats.instance
            had_round = True
        try:
            event = sample_next_event(state, params, ep_rng)
        except NoActiveTransitions:
            if had_round:
                errors.pop(), costs.pop(), quals.pop()
                if allocations is not None:
                    allocations.pop()
            break
        if state.t + event.dt > horizon:
            if had_round:
                errors.pop(), costs.pop(), quals.pop()
                if allocations is not None:
                    allocations.pop()
            state.t = horizon
            break
        apply_event(state, event)
        times.append(state.t)
        counts.append(state.n_infected)
        if state.n_infected == 0:
            extinct = state.t
    return metrics.RunRecord(
        times=np.asarray(times, dtype=np.float64),
        counts=np.asarray(counts, dtype=np.int64),
        errors=np.asarray(errors, dtype=np.float64),
        costs=np.asarray(costs, dtype=np.float64),
        qualities=np.asarray(quals, dtype=np.float64),
        extinction=extinct,
        seed=seed,
        digest=digest,
        n_nodes=graph.n,
        allocations=allocations,
    )
