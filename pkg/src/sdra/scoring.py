"""Node criticality scores and priority planning.

Four scoring rules decide which infected nodes deserve treatment:

* LRIE: healthy-neighbor count minus infected-neighbor count, an affine
  function of the cached infectious pressure, so it updates for free.
* MCM: a static priority plan; nodes early in an ordering chosen to
  minimize the ordering's max-cut get the highest scores.
* LRSR: drop of the adjacency spectral radius when the node is removed.
* RAND: i.i.d. uniform scores, redrawn each query.

The max-cut of an ordering is the maximum, over cut positions, of the
number of edges straddling the cut; :func:`optimize_plan` searches for
a low max-cut ordering with simulated annealing started from a spectral
(or BFS) seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import exp

import numpy as np

from .graphs import Graph

__all__ = [
    "PriorityPlan",
    "score_lrie",
    "score_mcm",
    "score_lrsr",
    "score_rand",
    "compute_maxcut",
    "optimize_plan",
    "save_plan",
    "load_plan",
    "LrieScorer",
    "McmScorer",
    "LrsrScorer",
    "RandScorer",
    "make_scorer",
]

logger = logging.getLogger(__name__)

POWER_TOL = 1e-8
POWER_MAX_ITERS = 10_000


@dataclass
class PriorityPlan:
    """A node ordering and the max-cut it achieves.

    ``order[0]`` is the highest-priority node. ``positions`` caches the
    1-based position of each node in the order.
    """

    order: np.ndarray
    maxcut: int
    positions: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.order = np.asarray(self.order, dtype=np.int64)
        if self.positions is None:
            pos = np.empty(len(self.order), dtype=np.int64)
            pos[self.order] = np.arange(1, len(self.order) + 1)
            self.positions = pos


def score_lrie(graph: Graph, state, i: int) -> float:
    """Healthy minus infected neighbor count of node i."""
    return float(graph.degrees[i] - 2 * state.infectious_pressure[i])


def score_mcm(plan: PriorityPlan, i: int) -> float:
    """Static plan score N + 1 - position(i); highest for the plan head."""
    if not 0 <= i < len(plan.order):
        raise ValueError(f"node {i} outside plan of size {len(plan.order)}")
    return float(len(plan.order) + 1 - plan.positions[i])


def score_rand(rng: np.random.Generator, i: int) -> float:
    """Uniform(0,1) draw, fresh per query."""
    return float(rng.random())


def compute_maxcut(graph: Graph, order) -> int:
    """Max over cut positions of the edge count straddling the cut.

    A cut after position c separates the first c nodes of the order
    from the rest; the straddle count is swept in O(E + N) by adding
    each node's right-minus-left neighbor balance.
    """
    order = np.asarray(order, dtype=np.int64)
    n = graph.n
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of all nodes")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    best = 0
    count = 0
    for c in range(n):
        v = int(order[c])
        for u in graph.neighbors[v]:
            count += 1 if pos[u] > c else -1
        if count > best:
            best = count
    return best


def _cut_profile(graph: Graph, order: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Straddle count after every position (last entry is zero)."""
    n = graph.n
    cuts = np.zeros(n, dtype=np.int64)
    count = 0
    for c in range(n):
        v = int(order[c])
        for u in graph.neighbors[v]:
            count += 1 if pos[u] > c else -1
        cuts[c] = count
    return cuts


def _bfs_seed_order(graph: Graph) -> np.ndarray:
    """Breadth-first order from a peripheral node, components by id."""
    n = graph.n
    visited = np.zeros(n, dtype=bool)

    def bfs(start: int) -> list[int]:
        frontier = [start]
        visited[start] = True
        out = [start]
        while frontier:
            nxt = []
            for v in frontier:
                for u in sorted(graph.neighbors[v]):
                    if not visited[u]:
                        visited[u] = True
                        nxt.append(u)
                        out.append(u)
            frontier = nxt
        return out

    # Double sweep: the farthest node from an arbitrary start is a good
    # peripheral node to order from.
    first = bfs(0)
    visited[:] = False
    order: list[int] = []
    order.extend(bfs(first[-1]))
    for v in range(n):
        if not visited[v]:
            order.extend(bfs(v))
    return np.asarray(order, dtype=np.int64)


def _spectral_seed_order(graph: Graph) -> np.ndarray | None:
    """Order nodes by the Fiedler vector of the Laplacian, if computable."""
    if graph.n < 8 or graph.edge_count == 0:
        return None
    try:
        from scipy.sparse import diags
        from scipy.sparse.linalg import eigsh

        adj = graph.adjacency_matrix()
        lap = diags(graph.degrees.astype(np.float64)) - adj
        _, vecs = eigsh(lap, k=2, sigma=-1e-6, which="LM")
        fiedler = vecs[:, 1]
    except Exception:
        return None
    return np.argsort(fiedler, kind="stable").astype(np.int64)


def optimize_plan(graph: Graph, budget: int, seed: int) -> PriorityPlan:
    """Search for a low max-cut ordering by simulated annealing.

    Moves are adjacent transpositions (with incremental cut updates)
    mixed with random segment relocations (full re-evaluation). The
    best order ever seen is returned, and the identity and seed orders
    are always candidates, so the result is never worse than either.

    Args:
        budget: number of annealing iterations, > 0.
        seed: RNG seed for the search.
    """
    if budget <= 0:
        raise ValueError("optimization budget must be positive")
    n = graph.n
    if n <= 1:
        return PriorityPlan(order=np.arange(n, dtype=np.int64), maxcut=0)
    rng = np.random.default_rng(seed)

    candidates = [np.arange(n, dtype=np.int64)]
    spectral = _spectral_seed_order(graph)
    if spectral is not None:
        candidates.append(spectral)
    candidates.append(_bfs_seed_order(graph))

    def evaluate(order: np.ndarray) -> tuple[int, int, np.ndarray]:
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        cuts = _cut_profile(graph, order, pos)
        return int(cuts.max(initial=0)), int(cuts.sum()), cuts

    scored = [(evaluate(o), o) for o in candidates]
    (best_max, best_sum, _), best_order = min(
        scored, key=lambda item: (item[0][0], item[0][1])
    )
    best_order = best_order.copy()

    order = best_order.copy()
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    cur_max, cur_sum, cuts = evaluate(order)
    # Secondary mass term breaks plateaus of equal max-cut.
    norm = float(n * max(graph.edge_count, 1) + 1)

    def energy(mx: int, sm: int) -> float:
        return mx + sm / norm

    t_hi = max(2.0, cur_max / 4.0)
    t_lo = 0.01
    cool = (t_lo / t_hi) ** (1.0 / budget)
    temp = t_hi

    for _ in range(budget):
        temp *= cool
        if n >= 2 and rng.random() < 0.85:
            p = int(rng.integers(n - 1))
            u, v = int(order[p]), int(order[p + 1])
            order[p], order[p + 1] = v, u
            pos[u], pos[v] = pos[v], pos[u]
            prev = cuts[p - 1] if p > 0 else 0
            balance = 0
            for w in graph.neighbors[v]:
                balance += 1 if pos[w] > p else -1
            new_cut = prev + balance
            old_cut = int(cuts[p])
            if new_cut == old_cut:
                continue
            new_sum = cur_sum + new_cut - old_cut
            if new_cut >= cur_max:
                new_max = new_cut
            elif old_cut == cur_max:
                saved = cuts[p]
                cuts[p] = new_cut
                new_max = int(cuts.max())
                cuts[p] = saved
            else:
                new_max = cur_max
            delta = energy(new_max, new_sum) - energy(cur_max, cur_sum)
            if delta <= 0 or rng.random() < exp(-delta / temp):
                cuts[p] = new_cut
                cur_max, cur_sum = new_max, new_sum
                if (cur_max, cur_sum) < (best_max, best_sum):
                    best_max, best_sum = cur_max, cur_sum
                    best_order = order.copy()
            else:
                order[p], order[p + 1] = u, v
                pos[u], pos[v] = pos[v], pos[u]
        else:
            span = int(rng.integers(1, max(2, n // 10) + 1))
            i = int(rng.integers(n - span + 1))
            segment = order[i : i + span].copy()
            rest = np.concatenate([order[:i], order[i + span :]])
            j = int(rng.integers(len(rest) + 1))
            cand = np.concatenate([rest[:j], segment, rest[j:]])
            cand_pos = np.empty(n, dtype=np.int64)
            cand_pos[cand] = np.arange(n)
            cand_cuts = _cut_profile(graph, cand, cand_pos)
            new_max, new_sum = int(cand_cuts.max(initial=0)), int(cand_cuts.sum())
            delta = energy(new_max, new_sum) - energy(cur_max, cur_sum)
            if delta <= 0 or rng.random() < exp(-delta / temp):
                order, pos, cuts = cand, cand_pos, cand_cuts
                cur_max, cur_sum = new_max, new_sum
                if (cur_max, cur_sum) < (best_max, best_sum):
                    best_max, best_sum = cur_max, cur_sum
                    best_order = order.copy()

    return PriorityPlan(order=best_order, maxcut=best_max)


def save_plan(plan: PriorityPlan, path) -> None:
    """Write a plan as a text permutation with a maxcut header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"maxcut={plan.maxcut}\n")
        for v in plan.order:
            fh.write(f"{int(v)}\n")


def load_plan(path) -> PriorityPlan:
    """Read a plan written by :func:`save_plan`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("maxcut="):
            raise ValueError(f"{path}: missing maxcut header")
        maxcut = int(header.split("=", 1)[1])
        order = [int(line) for line in fh if line.strip()]
    return PriorityPlan(order=np.asarray(order, dtype=np.int64), maxcut=maxcut)


# ---------------------------------------------------------------------------
# Spectral radius drop (LRSR)
# ---------------------------------------------------------------------------


def _spectral_radius(graph: Graph, excluded: int | None) -> float:
    """Largest adjacency eigenvalue, optionally with one node removed.

    Power iteration on A + I (the shift separates the dominant
    eigenvalue on bipartite graphs), relative tolerance ``POWER_TOL``.
    Falls back to the excluded-aware degree bound on non-convergence.
    """
    adj = graph.adjacency_matrix()
    n = graph.n
    vec = np.ones(n, dtype=np.float64)
    if excluded is not None:
        vec[excluded] = 0.0
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return 0.0
    vec /= norm
    lam_prev = None
    for _ in range(POWER_MAX_ITERS):
        nxt = adj @ vec + vec
        if excluded is not None:
            nxt[excluded] = 0.0
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            return 0.0
        nxt /= norm
        lam = float(nxt @ (adj @ nxt)) + 1.0
        if lam_prev is not None and abs(lam - lam_prev) <= POWER_TOL * max(
            1.0, abs(lam)
        ):
            return lam - 1.0
        lam_prev = lam
        vec = nxt
    logger.warning("power iteration did not converge; using degree fallback")
    raise ArithmeticError("power iteration did not converge")


def score_lrsr(graph: Graph, state, i: int) -> float:
    """Spectral radius drop when node i is removed from the graph."""
    try:
        lam_full = _spectral_radius(graph, None)
        lam_cut = _spectral_radius(graph, i)
        return lam_full - lam_cut
    except ArithmeticError:
        return float(graph.degrees[i])


# ---------------------------------------------------------------------------
# Vectorized scorers used by the control loop
# ---------------------------------------------------------------------------


class LrieScorer:
    """Vectorized LRIE over the epidemic state's pressure cache."""

    kind = "lrie"

    def __init__(self, graph: Graph) -> None:
        self._deg = graph.degrees

    def scores(self, state, ids: np.ndarray) -> np.ndarray:
        return (self._deg[ids] - 2 * state.infectious_pressure[ids]).astype(
            np.float64
        )


class McmScorer:
    """Static plan scores N + 1 - position."""

    kind = "mcm"

    def __init__(self, plan: PriorityPlan) -> None:
        n = len(plan.order)
        self.plan = plan
        self._scores = (n + 1 - plan.positions).astype(np.float64)

    def scores(self, state, ids: np.ndarray) -> np.ndarray:
        return self._scores[ids]


class RandScorer:
    """Fresh uniform scores each query."""

    kind = "rand"

    def __init__(self, rng: np.random.Generator) -> None:
        self._rng = rng

    def scores(self, state, ids: np.ndarray) -> np.ndarray:
        return self._rng.random(len(ids))


class LrsrScorer:
    """Spectral-drop scores, cached and refreshed every few rounds.

    Per-node eigenvalue recomputation costs O(E) per power iteration
    step, so scores are cached and the cache is invalidated every
    ``recompute_every`` rounds.
    """

    kind = "lrsr"

    def __init__(self, graph: Graph, recompute_every: int = 10) -> None:
        self._graph = graph
        self._every = max(1, recompute_every)
        self._cache: dict[int, float] = {}
        self._epoch = -1
        self._lam_full: float | None = None

    def _drop(self, i: int) -> float:
        try:
            if self._lam_full is None:
                self._lam_full = _spectral_radius(self._graph, None)
            return self._lam_full - _spectral_radius(self._graph, i)
        except ArithmeticError:
            return float(self._graph.degrees[i])

    def scores(self, state, ids: np.ndarray) -> np.ndarray:
        epoch = state.round_index // self._every
        if epoch != self._epoch:
            self._cache.clear()
            self._epoch = epoch
        out = np.empty(len(ids), dtype=np.float64)
        for j, i in enumerate(ids):
            i = int(i)
            if i not in self._cache:
                self._cache[i] = self._drop(i)
            out[j] = self._cache[i]
        return out


def make_scorer(
    kind: str,
    graph: Graph,
    rng: np.random.Generator | None = None,
    plan: PriorityPlan | None = None,
    recompute_every: int = 10,
):
    """Instantiate a scorer by kind name."""
    kind = kind.lower()
    if kind == "lrie":
        return LrieScorer(graph)
    if kind == "mcm":
        if plan is None:
            raise ValueError("mcm scorer requires a priority plan")
        return McmScorer(plan)
    if kind == "rand":
        if rng is None:
            raise ValueError("rand scorer requires an RNG")
        return RandScorer(rng)
    if kind == "lrsr":
        return LrsrScorer(graph, recompute_every)
    raise ValueError(f"unknown scorer kind {kind!r}")
