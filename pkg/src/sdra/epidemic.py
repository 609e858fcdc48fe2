"""Exact continuous-time SIS dynamics under treatment control.

Event-driven (Gillespie) simulation of the networked SIS process: a
healthy node gets infected at rate beta times its number of infected
neighbors; an infected node recovers at rate delta, boosted by rho
while it holds a treatment resource. Next events are drawn from the
aggregate rate, first the waiting time, then the event category
(infection or recovery), then the node within the category; this draw
order is fixed so runs on common random numbers stay aligned.

The state keeps incremental caches (infected count, per-node infectious
pressure, healthy-side pressure sum, treated count) so both event
sampling and LRIE scoring are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np

from .graphs import Graph

__all__ = [
    "INFECTION",
    "RECOVERY",
    "EpidemicParams",
    "EpidemicState",
    "EventDraw",
    "NoActiveTransitions",
    "initial_state",
    "node_rate",
    "total_infection_pressure",
    "total_recovery_pressure",
    "sample_next_event",
    "apply_event",
    "recompute_caches",
]

INFECTION = "infection"
RECOVERY = "recovery"


class NoActiveTransitions(RuntimeError):
    """Raised when the total event rate is zero (absorbing or frozen)."""


@dataclass
class EpidemicParams:
    """Rates of the controlled SIS process.

    Attributes:
        beta: per-edge infection rate (1/time).
        delta: self-recovery rate (1/time).
        rho: recovery boost of one treatment resource (1/time).
        budget: number of treatment resources b.
    """

    beta: float
    delta: float
    rho: float
    budget: int

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.delta < 0 or self.rho < 0:
            raise ValueError("delta and rho must be nonnegative")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")


@dataclass
class EventDraw:
    """One sampled transition: the node, its kind, and the waiting time."""

    node: int
    kind: str
    dt: float


@dataclass
class EpidemicState:
    """Mutable simulation state with incremental caches.

    Cache invariants (checked by :func:`recompute_caches` in tests):
    ``n_infected`` equals ``x.sum()``; ``infectious_pressure[i]`` equals
    the number of infected neighbors of i; ``healthy_pressure_sum``
    equals the pressure summed over healthy nodes (the count of ordered
    healthy-infected adjacent pairs); ``treated`` equals ``r.sum()``.
    Resources sit only on infected nodes: r <= x elementwise.
    """

    graph: Graph = field(repr=False)
    x: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    t: float
    n_infected: int
    treated: int
    infectious_pressure: np.ndarray = field(repr=False)
    healthy_pressure_sum: int
    round_index: int = 0


def initial_state(graph: Graph, infected) -> EpidemicState:
    """Build a state with the given infected set and no resources.

    Args:
        graph: the contact network.
        infected: "full" for all nodes, or an iterable of node ids.
    """
    x = np.zeros(graph.n, dtype=np.uint8)
    if isinstance(infected, str):
        if infected != "full":
            raise ValueError(f"unknown initial infection spec: {infected!r}")
        x[:] = 1
    else:
        ids = np.asarray(list(infected), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= graph.n):
            raise ValueError("infected node id out of range")
        x[ids] = 1
    r = np.zeros(graph.n, dtype=np.uint8)
    pressure = _pressure_from_scratch(graph, x)
    healthy_sum = int(pressure[x == 0].sum())
    return EpidemicState(
        graph=graph,
        x=x,
        r=r,
        t=0.0,
        n_infected=int(x.sum()),
        treated=0,
        infectious_pressure=pressure,
        healthy_pressure_sum=healthy_sum,
    )


def _pressure_from_scratch(graph: Graph, x: np.ndarray) -> np.ndarray:
    pressure = np.zeros(graph.n, dtype=np.int64)
    for v in np.flatnonzero(x):
        nbrs = graph.neighbors[v]
        if nbrs:
            pressure[nbrs] += 1
    return pressure


def recompute_caches(state: EpidemicState) -> tuple[int, int, np.ndarray, int]:
    """From-scratch cache values (n_infected, treated, pressure, healthy sum)."""
    pressure = _pressure_from_scratch(state.graph, state.x)
    healthy_sum = int(pressure[state.x == 0].sum())
    return int(state.x.sum()), int(state.r.sum()), pressure, healthy_sum


def node_rate(state: EpidemicState, params: EpidemicParams, i: int) -> float:
    """Transition rate of node i in the current state."""
    if state.x[i]:
        return params.delta + params.rho * float(state.r[i])
    return params.beta * float(state.infectious_pressure[i])


def total_infection_pressure(state: EpidemicState, params: EpidemicParams) -> float:
    """Aggregate infection rate: beta times ordered healthy-infected pairs."""
    return params.beta * state.healthy_pressure_sum


def total_recovery_pressure(state: EpidemicState, params: EpidemicParams) -> float:
    """Aggregate recovery rate: sum of delta + rho*r over infected nodes."""
    return params.delta * state.n_infected + params.rho * state.treated


def sample_next_event(
    state: EpidemicState, params: EpidemicParams, rng: np.random.Generator
) -> EventDraw:
    """Draw the next transition (dt, then category, then node).

    Raises:
        NoActiveTransitions: total rate is zero, i.e. the epidemic is
            extinct or frozen (no recovery channel and no infectious
            edge); the run must stop.
    """
    tot_inf = params.beta * state.healthy_pressure_sum
    tot_rec = params.delta * state.n_infected + params.rho * state.treated
    lam = tot_inf + tot_rec
    if lam <= 0.0:
        raise NoActiveTransitions(f"total rate is zero at t={state.t}")
    u0 = rng.random()
    while u0 == 0.0:
        u0 = rng.random()
    u1 = rng.random()
    u2 = rng.random()
    dt = -log(1.0 - u0) / lam
    if u1 * lam < tot_inf:
        weights = state.infectious_pressure * (1 - state.x)
        kind = INFECTION
    else:
        if params.rho != 0.0:
            weights = params.delta * state.x + params.rho * state.r
        else:
            weights = params.delta * state.x
        kind = RECOVERY
    cum = np.cumsum(weights)
    node = int(np.searchsorted(cum, u2 * cum[-1], side="right"))
    if node >= cum.shape[0]:
        # float roundoff put the target at the total mass exactly
        node = int(np.flatnonzero(weights)[-1])
    return EventDraw(node=node, kind=kind, dt=dt)


def apply_event(state: EpidemicState, event: EventDraw) -> EpidemicState:
    """Apply one transition in place, advancing time and all caches."""
    v = event.node
    graph = state.graph
    nbrs = graph.neighbors[v]
    p_v = int(state.infectious_pressure[v])
    deg_v = int(graph.degrees[v])
    if event.kind == INFECTION:
        if state.x[v]:
            raise ValueError(f"infection event on already infected node {v}")
        state.x[v] = 1
        state.n_infected += 1
        if nbrs:
            state.infectious_pressure[nbrs] += 1
        state.healthy_pressure_sum += deg_v - 2 * p_v
    elif event.kind == RECOVERY:
        if not state.x[v]:
            raise ValueError(f"recovery event on healthy node {v}")
        state.x[v] = 0
        state.n_infected -= 1
        if state.r[v]:
            state.r[v] = 0
            state.treated -= 1
        if nbrs:
            state.infectious_pressure[nbrs] -= 1
        state.healthy_pressure_sum += 2 * p_v - deg_v
    else:
        raise ValueError(f"unknown event kind {event.kind!r}")
    state.t += event.dt
    return state
