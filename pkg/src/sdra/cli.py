"""Experiment command line.

Subcommands: ``run`` (strategy comparison curves + AUC table),
``regress`` (paired online/offline error regression), ``cutoff-table``
(Monte Carlo cutoff table), ``sweep-alpha`` (AUC against sampling
ratio across network types), ``gen-graph`` (network generation to an
edge list), ``plan`` (static priority-order optimization).

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
Every CSV opens with one or more '#' comment lines carrying the config
digest, so outputs are traceable to the exact recipe that made them.
Reruns with an identical recipe produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import control, graphs, metrics, scoring, selection
from .config import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# Uniform grid used only for cross-seed curve averaging; per-run AUC
# integrates the event-time step function exactly.
GRID_POINTS = 512

__all__ = ["main"]


def _fmt(x: float) -> str:
    return repr(float(x))


def _eta_on_grid(record: metrics.RunRecord, grid: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise-constant infected fraction on a grid."""
    idx = np.searchsorted(record.times, grid, side="right") - 1
    idx = np.clip(idx, 0, len(record.times) - 1)
    return record.counts[idx] / record.n_nodes


def _mean_sem(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def _ensure_plan(cfg, graph, out_dir: Path) -> scoring.PriorityPlan | None:
    """Build (or reuse from disk) the static priority order if needed."""
    if not any(s.scorer == "mcm" for s in cfg.strategies):
        return None
    cache = out_dir / f"plan_{cfg.digest}_{cfg.plan_seed}.txt"
    if cache.exists():
        plan = scoring.load_plan(cache)
        if len(plan.order) == graph.n:
            return plan
    plan = scoring.optimize_plan(graph, cfg.epidemic.budget, seed=cfg.plan_seed)
    scoring.save_plan(plan, cache)
    return plan


def _needs_cutoff_table(strategies) -> bool:
    return any(
        s.family == "sdra" and s.algo == "ccm" and s.cutoff == "table"
        for s in strategies
    )


def _ensure_cutoff_table(cfg, out_dir: Path) -> selection.CutoffTable | None:
    if not _needs_cutoff_table(cfg.strategies):
        return None
    budget = cfg.epidemic.budget
    cache = out_dir / f"cutoff_b{budget}_r{cfg.cutoff_replicas}_s{cfg.cutoff_seed}.csv"
    if cache.exists():
        return selection.CutoffTable.load_csv(cache)
    table = selection.build_cutoff_table(
        budget, replicas=cfg.cutoff_replicas, seed=cfg.cutoff_seed
    )
    table.save_csv(
        cache,
        header_lines=[
            f"config={cfg.digest} command=cutoff-table budget={budget}"
            f" replicas={cfg.cutoff_replicas} seed={cfg.cutoff_seed}"
        ],
    )
    return table


def _run_one(payload):
    """Worker: one (strategy, seed) simulation. Top level for pickling."""
    (graph, params, strategy, sampler, horizon, seed, init, max_rounds,
     table, plan, snap_every, digest) = payload
    snapshots: list | None = [] if snap_every > 0 else None
    record = control.run_simulation(
        graph,
        params,
        strategy,
        sampler,
        horizon=horizon,
        seed=seed,
        init=init,
        max_rounds=max_rounds,
        cutoff_table=table,
        plan=plan,
        snapshot_every=snap_every,
        snapshots=snapshots,
        digest=digest,
    )
    return record, snapshots


def _map_jobs(payloads, threads: int):
    """Run payloads serially or on a process pool, preserving order."""
    if threads <= 1:
        return [_run_one(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_one, payloads, chunksize=4))


def _strategy_sampler(cfg, strategy) -> control.SamplerConfig:
    if strategy.alpha is None:
        return cfg.sampler
    return replace(cfg.sampler, alpha=strategy.alpha)


def cmd_run(cfg, out_dir: Path, threads: int) -> int:
    """Run the full (strategy x seed) matrix and write curves + AUCs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = config_mod.build_graph(cfg.network, cfg.base_dir)
    plan = _ensure_plan(cfg, graph, out_dir)
    table = _ensure_cutoff_table(cfg, out_dir)
    grid = np.linspace(0.0, cfg.horizon, GRID_POINTS)

    curve_rows = []
    auc_rows = []
    for strategy in cfg.strategies:
        sampler = _strategy_sampler(cfg, strategy)
        payloads = [
            (
                graph,
                cfg.epidemic,
                strategy,
                sampler,
                cfg.horizon,
                cfg.base_seed + i,
                cfg.init,
                cfg.max_rounds,
                table,
                plan,
                cfg.snapshot_every if i == 0 else 0,
                cfg.digest,
            )
            for i in range(cfg.seeds)
        ]
        results = _map_jobs(payloads, threads)

        etas = np.empty((cfg.seeds, GRID_POINTS))
        aucs = np.empty(cfg.seeds)
        for i, (record, snapshots) in enumerate(results):
            etas[i] = _eta_on_grid(record, grid)
            aucs[i] = metrics.auc_infection(record, cfg.horizon)
            if cfg.write_runs:
                run_dir = out_dir / "runs" / strategy.name
                run_dir.mkdir(parents=True, exist_ok=True)
                metrics.write_run_csv(
                    record,
                    run_dir / f"{cfg.base_seed + i}.csv",
                    header_lines=[
                        f"config={cfg.digest} strategy={strategy.name}"
                    ],
                )
            if snapshots:
                _write_score_snapshots(
                    out_dir / f"scores_{strategy.name}.csv",
                    snapshots,
                    cfg.digest,
                    strategy.name,
                    cfg.base_seed + i,
                )
        eta_mean = etas.mean(axis=0)
        eta_sem = (
            etas.std(axis=0, ddof=1) / np.sqrt(cfg.seeds)
            if cfg.seeds > 1
            else np.zeros(GRID_POINTS)
        )
        for t, m, s in zip(grid, eta_mean, eta_sem):
            curve_rows.append((strategy.name, t, m, s))
        auc_mean, auc_sem = _mean_sem(aucs)
        auc_rows.append((strategy.name, auc_mean, auc_sem))

    header = f"config={cfg.digest} command=run"
    with open(out_dir / "summary_curves.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("strategy,t,eta_mean,eta_sem\n")
        for name, t, m, s in curve_rows:
            fh.write(f"{name},{_fmt(t)},{_fmt(m)},{_fmt(s)}\n")
    with open(out_dir / "auc_summary.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("strategy,auc_mean,auc_sem,seeds,horizon\n")
        for name, m, s in auc_rows:
            fh.write(f"{name},{_fmt(m)},{_fmt(s)},{cfg.seeds},{_fmt(cfg.horizon)}\n")
    print(f"wrote {out_dir / 'summary_curves.csv'}")
    print(f"wrote {out_dir / 'auc_summary.csv'}")
    return EXIT_OK


def _write_score_snapshots(path: Path, snapshots, digest, strategy_name, seed):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={digest} strategy={strategy_name} seed={seed}\n")
        fh.write("round,score\n")
        for round_index, scores in snapshots:
            for s in np.asarray(scores, dtype=np.float64):
                fh.write(f"{round_index},{_fmt(s)}\n")


def cmd_regress(cfg, out_dir: Path, threads: int) -> int:
    """Paired online/offline runs, one regression line per alpha."""
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = config_mod.build_graph(cfg.network, cfg.base_dir)
    plan = _ensure_plan(cfg, graph, out_dir)
    table = _ensure_cutoff_table(cfg, out_dir)
    budget = cfg.epidemic.budget

    rows = []
    for alpha in cfg.alphas:
        points = []
        for strategy in cfg.strategies:
            sampler = replace(cfg.sampler, alpha=float(alpha))
            a_e = np.empty(cfg.seeds)
            a_dn = np.empty(cfg.seeds)
            for i in range(cfg.seeds):
                online, offline, _ = metrics.paired_offline_run(
                    graph,
                    cfg.epidemic,
                    strategy,
                    sampler,
                    horizon=cfg.horizon,
                    seed=cfg.base_seed + i,
                    init=cfg.init,
                    max_rounds=cfg.max_rounds,
                    cutoff_table=table,
                    plan=plan,
                    digest=cfg.digest,
                )
                a_e[i] = metrics.paired_error_auc(online, offline, budget)
                a_dn[i] = metrics.excess_infection_auc(online, offline)
            points.append((strategy.name, float(a_e.mean()), float(a_dn.mean())))
        xy = [(x, y) for _, x, y in points]
        if len(xy) >= 3:
            fit = metrics.fit_regression(xy, alpha=float(alpha))
        else:
            fit = metrics.RegressionFit(
                c1=float("nan"),
                c2=float("nan"),
                r2=float("nan"),
                alpha=float(alpha),
                points=xy,
                degenerate=True,
            )
        for name, x, y in points:
            rows.append((name, x, y, fit.c1, fit.c2, fit.r2, float(alpha)))

    out_path = out_dir / "regression.csv"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg.digest} command=regress\n")
        fh.write("strategy,A_e,A_dN,c1,c2,r2,alpha\n")
        for name, x, y, c1, c2, r2, alpha in rows:
            fh.write(
                f"{name},{_fmt(x)},{_fmt(y)},{_fmt(c1)},{_fmt(c2)},"
                f"{_fmt(r2)},{_fmt(alpha)}\n"
            )
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_cutoff_table(args) -> int:
    """Build and save a cutoff table from direct flags."""
    n_grid = tuple(int(v) for v in args.n_grid.split(","))
    q_grid = tuple(float(v) for v in args.q_grid.split(","))
    raw = {
        "budget": args.budget,
        "n_grid": list(n_grid),
        "q_grid": list(q_grid),
        "replicas": args.replicas,
        "seed": args.seed,
    }
    digest = config_mod.config_digest(raw)
    table = selection.build_cutoff_table(
        args.budget,
        n_grid=n_grid,
        q_grid=q_grid,
        replicas=args.replicas,
        seed=args.seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.save_csv(
        out,
        header_lines=[f"config={digest} command=cutoff-table"],
    )
    print(f"wrote {out}")
    return EXIT_OK


SWEEP_NETWORKS = ("er", "sf", "sw")
SWEEP_KBARS = (2, 10)


def _sweep_graph(kind: str, n: int, kbar: int, seed: int) -> graphs.Graph:
    if kind == "er":
        return graphs.generate_erdos_renyi(n, kbar / (n - 1), seed=seed)
    if kind == "sf":
        return graphs.generate_barabasi_albert(n, max(1, kbar // 2), seed=seed)
    if kind == "sw":
        return graphs.generate_watts_strogatz(n, kbar, 0.05, seed=seed)
    raise ValueError(f"unknown sweep network {kind!r}")


def cmd_sweep_alpha(cfg, out_dir: Path, threads: int) -> int:
    """AUC of the lead strategy across alpha, network type, and degree."""
    out_dir.mkdir(parents=True, exist_ok=True)
    strategy = cfg.strategies[0]
    table = _ensure_cutoff_table(cfg, out_dir)
    n = int(cfg.network.params.get("n", 100))
    graph_seed = int(cfg.network.params.get("seed", 0))

    rows = []
    for kind in SWEEP_NETWORKS:
        for kbar in SWEEP_KBARS:
            graph = _sweep_graph(kind, n, kbar, graph_seed)
            plan = _ensure_plan(cfg, graph, out_dir) if strategy.scorer == "mcm" else None
            for alpha in cfg.alphas:
                sampler = replace(cfg.sampler, alpha=float(alpha))
                payloads = [
                    (
                        graph,
                        cfg.epidemic,
                        strategy,
                        sampler,
                        cfg.horizon,
                        cfg.base_seed + i,
                        cfg.init,
                        cfg.max_rounds,
                        table,
                        plan,
                        0,
                        cfg.digest,
                    )
                    for i in range(cfg.seeds)
                ]
                results = _map_jobs(payloads, threads)
                aucs = np.array(
                    [metrics.auc_infection(r, cfg.horizon) for r, _ in results]
                )
                mean, sem = _mean_sem(aucs)
                rows.append((kind, kbar, float(alpha), mean, sem))

    out_path = out_dir / "sweep_alpha.csv"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg.digest} command=sweep-alpha\n")
        fh.write("network,kbar,alpha,auc_mean,auc_sem,seeds\n")
        for kind, kbar, alpha, mean, sem in rows:
            fh.write(
                f"{kind},{kbar},{_fmt(alpha)},{_fmt(mean)},{_fmt(sem)},{cfg.seeds}\n"
            )
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_gen_graph(args) -> int:
    """Generate a network and save it as an edge list."""
    kind = args.kind
    seed = args.seed
    if kind == "barabasi_albert":
        graph = graphs.generate_barabasi_albert(args.n, args.m, seed=seed)
    elif kind == "watts_strogatz":
        graph = graphs.generate_watts_strogatz(args.n, args.m, args.p, seed=seed)
    elif kind == "erdos_renyi":
        graph = graphs.generate_erdos_renyi(args.n, args.p, seed=seed)
    elif kind == "community":
        sizes = tuple(int(v) for v in args.level_sizes.split(","))
        probs = tuple(float(v) for v in args.level_probs.split(","))
        graph = graphs.generate_community(sizes, probs, seed=seed)
    else:
        raise ConfigError(f"unknown network kind {kind!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    graphs.save_edge_list(graph, out)
    print(
        f"wrote {out}: n={graph.n} edges={graph.edge_count}"
        f" mean_degree={graph.mean_degree:.3f}"
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    """Optimize a static priority order and save it."""
    if args.config:
        cfg = config_mod.load_config(args.config)
        graph = config_mod.build_graph(cfg.network, cfg.base_dir)
        budget = cfg.epidemic.budget
    elif args.graph:
        graph = graphs.load_edge_list(args.graph)
        budget = args.budget
    else:
        raise ConfigError("plan: provide --config or --graph")
    plan = scoring.optimize_plan(graph, budget, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scoring.save_plan(plan, out)
    print(f"wrote {out}: maxcut={plan.maxcut}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdra",
        description="Epidemic resource-allocation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", required=True, help="recipe JSON path")
        p.add_argument("--seeds", type=int, default=None, help="override seed count")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes")

    p_run = sub.add_parser("run", help="strategy comparison curves and AUCs")
    add_config_flags(p_run)
    p_run.set_defaults(func=_dispatch_run)

    p_reg = sub.add_parser("regress", help="online/offline error regression")
    add_config_flags(p_reg)
    p_reg.set_defaults(func=_dispatch_regress)

    p_cut = sub.add_parser("cutoff-table", help="build the cutoff table")
    p_cut.add_argument("--budget", type=int, required=True)
    p_cut.add_argument(
        "--n-grid",
        default=",".join(str(v) for v in selection.DEFAULT_N_GRID),
    )
    p_cut.add_argument(
        "--q-grid",
        default=",".join(str(v) for v in selection.DEFAULT_Q_GRID),
    )
    p_cut.add_argument("--replicas", type=int, default=2000)
    p_cut.add_argument("--seed", type=int, default=0)
    p_cut.add_argument("--out", required=True, help="output CSV path")
    p_cut.set_defaults(func=cmd_cutoff_table)

    p_sweep = sub.add_parser("sweep-alpha", help="AUC against sampling ratio")
    add_config_flags(p_sweep)
    p_sweep.set_defaults(func=_dispatch_sweep)

    p_gen = sub.add_parser("gen-graph", help="generate a network edge list")
    p_gen.add_argument(
        "--kind",
        required=True,
        choices=["barabasi_albert", "watts_strogatz", "erdos_renyi", "community"],
    )
    p_gen.add_argument("--n", type=int, default=100)
    p_gen.add_argument("--m", type=int, default=2)
    p_gen.add_argument("--p", type=float, default=0.05)
    p_gen.add_argument("--level-sizes", default="100,3,4")
    p_gen.add_argument("--level-probs", default="0.1,0.01,0.001")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_graph)

    p_plan = sub.add_parser("plan", help="optimize the static priority order")
    p_plan.add_argument("--config", default=None)
    p_plan.add_argument("--graph", default=None, help="edge list path")
    p_plan.add_argument("--budget", type=int, default=1)
    p_plan.add_argument("--seed", type=int, default=0)
    p_plan.add_argument("--out", required=True)
    p_plan.set_defaults(func=cmd_plan)

    return parser


def _load_with_overrides(args):
    cfg = config_mod.load_config(args.config)
    if args.seeds is not None:
        if args.seeds <= 0:
            raise ConfigError("--seeds: must be positive")
        cfg.seeds = args.seeds
    out_dir = Path(args.out) if args.out else Path("out")
    return cfg, out_dir


def _dispatch_run(args) -> int:
    cfg, out_dir = _load_with_overrides(args)
    return cmd_run(cfg, out_dir, args.threads)


def _dispatch_regress(args) -> int:
    cfg, out_dir = _load_with_overrides(args)
    return cmd_regress(cfg, out_dir, args.threads)


def _dispatch_sweep(args) -> int:
    cfg, out_dir = _load_with_overrides(args)
    return cmd_sweep_alpha(cfg, out_dir, args.threads)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
