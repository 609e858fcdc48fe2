"""Experiment configuration: JSON recipes, validation, digests.

A recipe is a single JSON file describing the network, the epidemic
parameters, the strategies to compare, the sampler, and the run
matrix. Validation reports the offending key path, and every output
file carries a short digest of the canonical config for provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .control import SamplerConfig, StrategyConfig
from .epidemic import EpidemicParams
from . import graphs

__all__ = [
    "ConfigError",
    "NetworkConfig",
    "ExperimentConfig",
    "load_config",
    "config_digest",
    "build_graph",
]

NETWORK_KINDS = (
    "barabasi_albert",
    "watts_strogatz",
    "erdos_renyi",
    "community",
    "edge_list",
    "path",
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class NetworkConfig:
    """One network to simulate on: a generator plus its parameters."""

    kind: str
    params: dict


@dataclass
class ExperimentConfig:
    """A full experiment recipe."""

    network: NetworkConfig
    epidemic: EpidemicParams
    strategies: list[StrategyConfig]
    sampler: SamplerConfig
    horizon: float
    seeds: int
    base_seed: int = 0
    init: object = "full"
    alphas: tuple = (1.0, 0.5, 0.4, 0.2)
    snapshot_every: int = 0
    max_rounds: int = 1_000_000
    write_runs: bool = True
    cutoff_replicas: int = 2000
    cutoff_seed: int = 0
    plan_seed: int = 0
    base_dir: Path = field(default_factory=Path)
    digest: str = ""
    raw: dict = field(default_factory=dict)


def config_digest(raw: dict) -> str:
    """Short stable digest of a config mapping."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _get(mapping: dict, key: str, path: str, kind, *, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(
            f"{path}.{key}: expected {getattr(kind, '__name__', kind)},"
            f" got {type(value).__name__}"
        )
    return value


def _parse_network(section: dict, path: str) -> NetworkConfig:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = _get(section, "kind", path, str, required=True)
    if kind not in NETWORK_KINDS:
        raise ConfigError(f"{path}.kind: unknown network kind {kind!r}")
    params = {k: v for k, v in section.items() if k != "kind"}
    return NetworkConfig(kind=kind, params=params)


def _parse_strategy(entry: dict, path: str) -> StrategyConfig:
    if not isinstance(entry, dict):
        raise ConfigError(f"{path}: expected an object")
    name = _get(entry, "name", path, str, required=True)
    family = _get(entry, "family", path, str, required=True)
    scorer = _get(entry, "scorer", path, str, default="lrie")
    algo = _get(entry, "algo", path, str)
    cutoff = entry.get("cutoff", "table")
    alpha = _get(entry, "alpha", path, float)
    try:
        return StrategyConfig(
            name=name,
            family=family,
            scorer=scorer,
            algo=algo,
            cutoff=cutoff,
            alpha=alpha,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Load and validate a JSON recipe.

    Args:
        path: recipe file. Relative file references inside the recipe
            (edge lists) resolve against the recipe's directory.

    Returns:
        Validated ExperimentConfig carrying the config digest.

    Raises:
        ConfigError: malformed or out-of-range entries, with key path.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root: expected an object")

    network = _parse_network(
        _get(raw, "network", "config", dict, required=True), "network"
    )

    epi_raw = _get(raw, "epidemic", "config", dict, required=True)
    try:
        epidemic = EpidemicParams(
            beta=_get(epi_raw, "beta", "epidemic", float, required=True),
            delta=_get(epi_raw, "delta", "epidemic", float, required=True),
            rho=_get(epi_raw, "rho", "epidemic", float, required=True),
            budget=_get(epi_raw, "budget", "epidemic", int, required=True),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"epidemic: {exc}") from exc

    strat_raw = _get(raw, "strategies", "config", list, required=True)
    if not strat_raw:
        raise ConfigError("strategies: must list at least one strategy")
    strategies = [
        _parse_strategy(entry, f"strategies[{i}]")
        for i, entry in enumerate(strat_raw)
    ]
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise ConfigError("strategies: names must be unique")

    samp_raw = _get(raw, "sampler", "config", dict, default={})
    try:
        sampler = SamplerConfig(
            alpha=_get(samp_raw, "alpha", "sampler", float, default=0.5),
            mode=_get(samp_raw, "mode", "sampler", str, default="uniform"),
            size_mode=_get(
                samp_raw, "size_mode", "sampler", str, default="proportional"
            ),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"sampler: {exc}") from exc

    horizon = _get(raw, "horizon", "config", float, required=True)
    if horizon <= 0:
        raise ConfigError("horizon: must be positive")
    seeds = _get(raw, "seeds", "config", int, required=True)
    if seeds <= 0:
        raise ConfigError("seeds: must be positive")

    init = raw.get("init", "full")
    if isinstance(init, str):
        if init != "full":
            raise ConfigError("init: string form must be 'full'")
    elif isinstance(init, (int, float)) and not isinstance(init, bool):
        init = float(init)
        if not 0 < init <= 1:
            raise ConfigError("init: fraction must lie in (0, 1]")
    elif isinstance(init, list):
        if not all(isinstance(v, int) for v in init):
            raise ConfigError("init: explicit set must hold integers")
    else:
        raise ConfigError("init: expected 'full', a fraction, or an id list")

    alphas = raw.get("alphas", [1.0, 0.5, 0.4, 0.2])
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("alphas: expected a non-empty list")
    for i, a in enumerate(alphas):
        if not isinstance(a, (int, float)) or isinstance(a, bool) or not 0 < a <= 1:
            raise ConfigError(f"alphas[{i}]: must lie in (0, 1]")

    snapshot_every = _get(raw, "snapshot_every", "config", int, default=0)
    if snapshot_every < 0:
        raise ConfigError("snapshot_every: must be nonnegative")
    max_rounds = _get(raw, "max_rounds", "config", int, default=1_000_000)
    if max_rounds <= 0:
        raise ConfigError("max_rounds: must be positive")

    cfg = ExperimentConfig(
        network=network,
        epidemic=epidemic,
        strategies=strategies,
        sampler=sampler,
        horizon=horizon,
        seeds=seeds,
        base_seed=_get(raw, "base_seed", "config", int, default=0),
        init=init,
        alphas=tuple(float(a) for a in alphas),
        snapshot_every=snapshot_every,
        max_rounds=max_rounds,
        write_runs=_get(raw, "write_runs", "config", bool, default=True),
        cutoff_replicas=_get(raw, "cutoff_replicas", "config", int, default=2000),
        cutoff_seed=_get(raw, "cutoff_seed", "config", int, default=0),
        plan_seed=_get(raw, "plan_seed", "config", int, default=0),
        base_dir=path.parent,
        digest=config_digest(raw),
        raw=raw,
    )
    build_graph(cfg.network, cfg.base_dir, validate_only=True)
    return cfg


def build_graph(network: NetworkConfig, base_dir: Path, *, validate_only: bool = False):
    """Materialize the configured network.

    Args:
        network: parsed network section.
        base_dir: directory for resolving relative edge-list paths.
        validate_only: check parameters without generating.

    Returns:
        Graph, or None when validate_only is set.
    """
    kind, p = network.kind, dict(network.params)
    path = "network"

    def need(key, typ):
        return _get(p, key, path, typ, required=True)

    if kind == "edge_list":
        rel = need("path", str)
        target = (base_dir / rel) if not Path(rel).is_absolute() else Path(rel)
        if not target.exists():
            raise ConfigError(f"network.path: file not found: {target}")
        if validate_only:
            return None
        return graphs.load_edge_list(target)

    if kind == "path":
        n = need("n", int)
        if n <= 0:
            raise ConfigError("network.n: must be positive")
        if validate_only:
            return None
        return graphs.Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    seed = _get(p, "seed", path, int, default=0)
    try:
        if kind == "barabasi_albert":
            n, m = need("n", int), need("m", int)
            if validate_only:
                if n <= 0 or m <= 0 or m >= n:
                    raise ConfigError("network: need 0 < m < n")
                return None
            return graphs.generate_barabasi_albert(n, m, seed=seed)
        if kind == "watts_strogatz":
            n, m = need("n", int), need("m", int)
            prob = _get(p, "p", path, float, required=True)
            if validate_only:
                if n <= 0 or m <= 0 or not 0 <= prob <= 1:
                    raise ConfigError("network: need n > 0, m > 0, 0 <= p <= 1")
                return None
            return graphs.generate_watts_strogatz(n, m, prob, seed=seed)
        if kind == "erdos_renyi":
            n = need("n", int)
            if "mean_degree" in p:
                kbar = _get(p, "mean_degree", path, float, required=True)
                prob = kbar / (n - 1) if n > 1 else 0.0
            else:
                prob = _get(p, "p", path, float, required=True)
            if validate_only:
                if n <= 0 or not 0 <= prob <= 1:
                    raise ConfigError("network: need n > 0 and 0 <= p <= 1")
                return None
            return graphs.generate_erdos_renyi(n, prob, seed=seed)
        if kind == "community":
            sizes = need("level_sizes", list)
            probs = need("level_probs", list)
            if validate_only:
                if len(sizes) != len(probs):
                    raise ConfigError(
                        "network: level_sizes and level_probs must align"
                    )
                return None
            return graphs.generate_community(
                tuple(sizes), tuple(probs), seed=seed
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"network: {exc}") from exc
    raise ConfigError(f"network.kind: unknown network kind {kind!r}")
