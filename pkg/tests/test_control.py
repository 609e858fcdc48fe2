"""Round loop: sampling, warm starts, batch and sequential reallocation."""

from __future__ import annotations

import numpy as np
import pytest

from property_checks import check_budget_invariant
from sdra.control import (
    SamplerConfig,
    StrategyConfig,
    draw_sample,
    initialize_allocation,
    resolve_initial_infection,
    run_rdra_round,
    run_sdra_round,
    run_simulation,
    trigger_round,
    warm_start,
)
from sdra.epidemic import (
    EpidemicParams,
    EventDraw,
    RECOVERY,
    apply_event,
    initial_state,
)
from sdra.graphs import Graph, generate_erdos_renyi, generate_watts_strogatz
from sdra.scoring import make_scorer
from sdra.selection import WsspInstance, _sequential_pass, offline_select


class FixedScorer:
    """Test stub returning preset per-node scores."""

    kind = "fixed"

    def __init__(self, table):
        self._table = np.asarray(table, dtype=np.float64)

    def scores(self, state, ids):
        return self._table[np.asarray(ids, dtype=np.int64)]


def params_with(budget, beta=1.0, delta=0.5, rho=2.0):
    return EpidemicParams(beta=beta, delta=delta, rho=rho, budget=budget)


class TestWarmStart:
    def test_round_trigger_fires_on_every_change(self, path4):
        assert trigger_round(initial_state(path4, "full"))

    def test_untreated_state_has_empty_preselection(self, path4):
        assert warm_start(initial_state(path4, "full")).size == 0

    def test_holders_are_treated_nodes(self, path4):
        state = initial_state(path4, "full")
        state.r[[1, 3]] = 1
        state.treated = 2
        assert warm_start(state).tolist() == [1, 3]

    def test_recovered_holder_leaves_preselection(self, path4):
        state = initial_state(path4, "full")
        state.r[[1, 3]] = 1
        state.treated = 2
        apply_event(state, EventDraw(node=3, kind=RECOVERY, dt=0.1))
        assert warm_start(state).tolist() == [1]


class TestDrawSample:
    def test_full_alpha_takes_every_untreated_infected(self, rng):
        graph = generate_erdos_renyi(40, 0.1, seed=0)
        state = initial_state(graph, range(20))
        state.r[[0, 1]] = 1
        state.treated = 2
        cfg = SamplerConfig(alpha=1.0)
        sample = draw_sample(state, cfg, np.random.default_rng(0))
        assert sample.tolist() == list(range(2, 20))

    def test_proportional_floor_arithmetic(self):
        graph = Graph.from_edges(700, [])
        state = initial_state(graph, range(600))
        cfg = SamplerConfig(alpha=0.05)
        sample = draw_sample(state, cfg, np.random.default_rng(1))
        assert sample.size == 30

    def test_fixed_mode_caps_at_availability(self):
        graph = Graph.from_edges(100, [])
        state = initial_state(graph, range(20))
        cfg = SamplerConfig(alpha=0.5, size_mode="fixed")
        sample = draw_sample(state, cfg, np.random.default_rng(2))
        assert sample.size == 20
        state2 = initial_state(graph, range(80))
        sample2 = draw_sample(state2, cfg, np.random.default_rng(2))
        assert sample2.size == 50

    def test_empty_when_no_eligible_nodes(self, path4):
        state = initial_state(path4, [])
        cfg = SamplerConfig(alpha=1.0)
        assert draw_sample(state, cfg, np.random.default_rng(0)).size == 0

    def test_softmax_prefers_high_scores(self):
        graph = Graph.from_edges(4, [])
        state = initial_state(graph, [0, 1])
        cfg = SamplerConfig(alpha=0.5, mode="softmax")
        scorer = FixedScorer([50.0, 0.0, 0.0, 0.0])
        rng = np.random.default_rng(3)
        picks = [draw_sample(state, cfg, rng, scorer=scorer)[0] for _ in range(200)]
        assert np.mean(np.asarray(picks) == 0) > 0.99

    def test_softmax_needs_scorer(self, path4):
        state = initial_state(path4, "full")
        cfg = SamplerConfig(alpha=1.0, mode="softmax")
        with pytest.raises(ValueError):
            draw_sample(state, cfg, np.random.default_rng(0))

    def test_sampler_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(alpha=1.2)
        with pytest.raises(ValueError):
            SamplerConfig(mode="greedy")
        with pytest.raises(ValueError):
            SamplerConfig(size_mode="half")


class TestStrategyConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="best")
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="sdra")  # missing algo
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="rdra", algo="mean")
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="sdra", algo="ccm", cutoff="magic")
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="sdra", algo="ccm", cutoff=-1)
        with pytest.raises(ValueError):
            StrategyConfig(name="x", family="rdra", alpha=0.0)

    def test_case_normalization(self):
        s = StrategyConfig(name="x", family="SDRA", scorer="LRIE", algo="CCM")
        assert (s.family, s.scorer, s.algo) == ("sdra", "lrie", "ccm")


class TestBatchRound:
    def test_empty_sample_changes_nothing(self, path4):
        state = initial_state(path4, "full")
        state.r[1] = 1
        state.treated = 1
        stats = run_rdra_round(
            state, params_with(2), np.empty(0, dtype=np.int64), FixedScorer(np.zeros(4))
        )
        assert stats.n_sampled == 0
        assert state.r[1] == 1 and state.treated == 1

    def test_selects_pool_optimum(self, rng):
        for seed in range(8):
            graph = generate_erdos_renyi(18, 0.2, seed=seed)
            infected = np.flatnonzero(rng.random(18) < 0.6)
            if infected.size < 4:
                continue
            state = initial_state(graph, infected)
            budget = 3
            state.r[infected[:2]] = 1
            state.treated = 2
            params = params_with(budget)
            scorer = make_scorer("lrie", graph)
            sample = draw_sample(
                state, SamplerConfig(alpha=1.0), np.random.default_rng(seed)
            )
            pool = np.concatenate([warm_start(state), sample])
            scores = scorer.scores(state, pool)
            run_rdra_round(state, params, sample, scorer)
            cap = min(budget, state.n_infected)
            order = np.lexsort((pool, -scores))
            want = set(pool[order[:cap]].tolist())
            assert set(np.flatnonzero(state.r).tolist()) == want

    def test_full_information_family_equals_full_alpha_batch(self):
        graph = generate_watts_strogatz(60, 4, 0.1, seed=7)
        params = params_with(4, beta=1.2, delta=0.4, rho=3.0)
        sampler = SamplerConfig(alpha=1.0)
        rec_dra = run_simulation(
            graph,
            params,
            StrategyConfig(name="a", family="dra"),
            sampler,
            horizon=4.0,
            seed=11,
        )
        rec_rdra = run_simulation(
            graph,
            params,
            StrategyConfig(name="b", family="rdra"),
            sampler,
            horizon=4.0,
            seed=11,
        )
        assert np.array_equal(rec_dra.times, rec_rdra.times)
        assert np.array_equal(rec_dra.counts, rec_rdra.counts)


class TestSequentialRound:
    def test_better_candidate_swaps_in(self, star6):
        # treated leaves score -1 each; the untreated center scores +1
        # and beats the holder mean, evicting one leaf
        state = initial_state(star6, [0, 1, 2])
        state.r[[1, 2]] = 1
        state.treated = 2
        strategy = StrategyConfig(name="s", family="sdra", algo="mean")
        scorer = make_scorer("lrie", star6)
        stats = run_sdra_round(
            state,
            params_with(2),
            np.array([0]),
            scorer,
            strategy,
            np.random.default_rng(0),
            None,
            0.5,
        )
        held = set(np.flatnonzero(state.r).tolist())
        assert 0 in held and len(held) == 2
        assert stats.error == 0.0 and stats.cost == pytest.approx(0.0)

    def test_single_swap_withdraws_from_worse_preselected(self):
        # stream [-1, 1, six below the updated mean]: only the second
        # candidate is taken, and it takes the slot of the -1 holder
        pre_scores = [0.0, -1.0]
        cand_scores = [-1.0, 1.0, 0.4, 0.3, 0.2, 0.1, 0.0, -0.5]
        inst = WsspInstance(
            budget=2,
            pre_ids=np.array([0, 1]),
            pre_scores=np.array(pre_scores),
            cand_ids=10 + np.arange(8),
            cand_scores=np.array(cand_scores),
        )
        out = _sequential_pass(
            inst, lambda pool: sum(pool.scores) / len(pool.scores)
        )
        assert out.decisions.tolist() == [False, True] + [False] * 6
        assert set(out.holder_ids) == {0, 11}

    def test_oracle_threshold_reaches_batch_allocation(self, rng):
        # accepting exactly the offline winners leaves the offline set
        for _ in range(20):
            b, n = 3, 7
            scores = rng.normal(size=b + n)
            inst = WsspInstance(
                budget=b,
                pre_ids=np.arange(b),
                pre_scores=scores[:b],
                cand_ids=100 + np.arange(n),
                cand_scores=scores[b:],
            )
            off = offline_select(inst)
            lut = dict(
                zip(inst.pool_ids().tolist(), inst.pool_scores().tolist())
            )
            off_scores = sorted(lut[int(i)] for i in off)
            outside = [s for i, s in lut.items() if int(i) not in set(off.tolist())]
            boundary = (
                (off_scores[0] + max(outside)) / 2 if outside else -np.inf
            )
            out = _sequential_pass(inst, lambda pool: boundary)
            assert set(out.holder_ids) == set(off.tolist())

    def test_leftover_resources_go_to_last_arrivals(self):
        # nobody beats the threshold, one slot is free: the latest
        # candidate gets it at round end
        graph = Graph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
        state = initial_state(graph, [0, 1, 2, 3])
        state.r[0] = 1
        state.treated = 1
        strategy = StrategyConfig(name="s", family="sdra", algo="mean")
        scorer = FixedScorer([10.0, -5.0, -6.0, -7.0, 0.0, 0.0])
        stats = run_sdra_round(
            state,
            params_with(2),
            np.array([1, 2, 3]),
            scorer,
            strategy,
            np.random.default_rng(5),
            None,
            0.5,
        )
        held = np.flatnonzero(state.r)
        assert held.size == 2
        assert 0 in held.tolist()
        assert stats.n_sampled == 3

    def test_ccm_cutoff_sources(self, rng):
        graph = Graph.from_edges(30, [])
        params = params_with(3)
        scorer = FixedScorer(rng.random(30))
        sample = np.arange(10, 26)
        for cutoff in ("sqrt", "inve", 4, 0):
            state = initial_state(graph, range(30))
            state.r[[0, 1, 2]] = 1
            state.treated = 3
            strategy = StrategyConfig(
                name="s", family="sdra", algo="ccm", cutoff=cutoff
            )
            stats = run_sdra_round(
                state,
                params,
                sample,
                scorer,
                strategy,
                np.random.default_rng(7),
                None,
                0.5,
            )
            assert stats.n_sampled == sample.size
            assert state.treated == 3
            assert int(state.r.sum()) == 3

    def test_table_cutoff_requires_table(self):
        graph = Graph.from_edges(12, [])
        state = initial_state(graph, range(12))
        strategy = StrategyConfig(name="s", family="sdra", algo="ccm")
        with pytest.raises(ValueError):
            run_sdra_round(
                state,
                params_with(2),
                np.arange(6),
                FixedScorer(np.zeros(12)),
                strategy,
                np.random.default_rng(0),
                None,
                0.5,
            )

    def test_budget_invariant_over_driven_rounds(self):
        check_budget_invariant(rounds=120, seed=1)


class TestInitialization:
    def test_initial_allocation_counts(self, rng):
        graph = generate_erdos_renyi(30, 0.1, seed=1)
        state = initial_state(graph, range(10))
        initialize_allocation(state, params_with(4), rng)
        assert state.treated == 4
        assert np.all(state.x[np.flatnonzero(state.r)] == 1)
        state2 = initial_state(graph, [3, 4])
        initialize_allocation(state2, params_with(4), rng)
        assert state2.treated == 2

    def test_zero_budget_leaves_untreated(self, path4, rng):
        state = initial_state(path4, "full")
        initialize_allocation(state, params_with(0), rng)
        assert state.treated == 0

    def test_initial_infection_specs(self, rng):
        graph = generate_erdos_renyi(10, 0.3, seed=0)
        assert resolve_initial_infection(graph, "full", rng) == "full"
        ids = resolve_initial_infection(graph, 0.2, rng)
        assert len(ids) == 2
        assert resolve_initial_infection(graph, [1, 5], rng).tolist() == [1, 5]
        with pytest.raises(ValueError):
            resolve_initial_infection(graph, "half", rng)
        with pytest.raises(ValueError):
            resolve_initial_infection(graph, 1.5, rng)


class TestRunSimulation:
    def test_round_event_alignment_and_record_shape(self):
        graph = generate_watts_strogatz(50, 4, 0.1, seed=3)
        params = params_with(4, beta=1.0, delta=0.3, rho=2.0)
        rec = run_simulation(
            graph,
            params,
            StrategyConfig(name="s", family="sdra", algo="mean"),
            SamplerConfig(alpha=0.5),
            horizon=3.0,
            seed=5,
        )
        n_events = rec.times.size - 1
        assert rec.errors.size == n_events
        assert rec.costs.size == n_events
        assert np.all(np.diff(rec.times) > 0)
        assert np.all(np.abs(np.diff(rec.counts)) == 1)
        assert rec.n_nodes == 50

    def test_identical_seeds_reproduce_bitwise(self):
        graph = generate_watts_strogatz(40, 4, 0.1, seed=2)
        params = params_with(3)
        kwargs = dict(horizon=2.0, seed=9)
        recs = [
            run_simulation(
                graph,
                params,
                StrategyConfig(name="s", family="rdra"),
                SamplerConfig(alpha=0.5),
                **kwargs,
            )
            for _ in range(2)
        ]
        assert np.array_equal(recs[0].times, recs[1].times)
        assert np.array_equal(recs[0].counts, recs[1].counts)
        assert np.array_equal(recs[0].qualities, recs[1].qualities)

    def test_common_random_numbers_align_when_treatment_is_inert(self):
        # rho=0 makes allocations irrelevant to the dynamics, so two
        # different strategies under one seed see the same trajectory
        graph = generate_watts_strogatz(40, 4, 0.1, seed=2)
        params = params_with(3, beta=1.0, delta=1.0, rho=0.0)
        args = dict(horizon=2.0, seed=13)
        a = run_simulation(
            graph,
            params,
            StrategyConfig(name="a", family="rdra"),
            SamplerConfig(alpha=0.5),
            **args,
        )
        b = run_simulation(
            graph,
            params,
            StrategyConfig(name="b", family="sdra", algo="median"),
            SamplerConfig(alpha=0.5),
            **args,
        )
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.counts, b.counts)

    def test_zero_budget_skips_rounds(self, path4):
        params = EpidemicParams(beta=0.5, delta=2.0, rho=0.0, budget=0)
        rec = run_simulation(
            path4,
            params,
            StrategyConfig(name="s", family="rdra"),
            SamplerConfig(alpha=0.5),
            horizon=50.0,
            seed=1,
        )
        assert rec.errors.size == 0
        assert rec.extinction is not None
        assert rec.counts[-1] == 0

    def test_empty_initial_infection_is_immediately_absorbed(self, path4):
        rec = run_simulation(
            path4,
            params_with(2),
            StrategyConfig(name="s", family="rdra"),
            SamplerConfig(alpha=0.5),
            horizon=5.0,
            seed=1,
            init=[],
        )
        assert rec.times.tolist() == [0.0]
        assert rec.counts.tolist() == [0]
        assert rec.errors.size == 0

    def test_round_cap_stops_run(self):
        graph = generate_watts_strogatz(40, 4, 0.1, seed=2)
        rec = run_simulation(
            graph,
            params_with(3),
            StrategyConfig(name="s", family="rdra"),
            SamplerConfig(alpha=0.5),
            horizon=1e9,
            seed=3,
            max_rounds=50,
        )
        assert rec.times.size - 1 <= 50

    def test_snapshots_collected_on_schedule(self):
        graph = generate_watts_strogatz(40, 4, 0.1, seed=2)
        snaps = []
        run_simulation(
            graph,
            params_with(3),
            StrategyConfig(name="s", family="rdra"),
            SamplerConfig(alpha=0.5),
            horizon=2.0,
            seed=3,
            snapshot_every=5,
            snapshots=snaps,
        )
        rounds = [r for r, _ in snaps]
        assert rounds[:3] == [1, 5, 10]
        for r, scores in snaps:
            assert scores.ndim == 1 and scores.size > 0

    def test_horizon_validation(self, path4):
        with pytest.raises(ValueError):
            run_simulation(
                path4,
                params_with(1),
                StrategyConfig(name="s", family="rdra"),
                SamplerConfig(),
                horizon=0.0,
                seed=0,
            )
