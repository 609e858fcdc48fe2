"""Network representation, synthetic generators, and edge-list ingestion.

Graphs are undirected, unweighted, without self-loops or duplicate
edges. Node ids are dense integers 0..N-1. Adjacency is stored both as
neighbor lists (fast iteration in the event loop) and as per-node hash
sets for O(1) membership when N is small enough; a scipy CSR matrix is
built lazily for spectral work.

All generators consume a ``numpy.random.Generator`` seeded from the
given seed in a fixed draw order, so a fixed seed yields a bit-identical
adjacency across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "generate_barabasi_albert",
    "generate_watts_strogatz",
    "generate_community",
    "generate_erdos_renyi",
    "load_edge_list",
    "save_edge_list",
]

# Above this size per-node hash sets are skipped to save memory.
MEMBERSHIP_LIMIT = 100_000


@dataclass
class Graph:
    """Immutable undirected graph with cached degree data."""

    n: int
    neighbors: list[list[int]]
    degrees: np.ndarray = field(repr=False)
    edge_count: int = 0
    adj_sets: list[set[int]] | None = field(default=None, repr=False)
    _csr: object = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build a graph from an iterable of (u, v) pairs.

        Self-loops are dropped and duplicates collapsed; both
        orientations of an edge count once.
        """
        if n < 0:
            raise ValueError("node count must be nonnegative")
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                continue
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            seen.add((u, v) if u < v else (v, u))
        neighbors: list[list[int]] = [[] for _ in range(n)]
        for u, v in sorted(seen):
            neighbors[u].append(v)
            neighbors[v].append(u)
        for lst in neighbors:
            lst.sort()
        degrees = np.array([len(lst) for lst in neighbors], dtype=np.int64)
        adj_sets = [set(lst) for lst in neighbors] if n <= MEMBERSHIP_LIMIT else None
        return cls(
            n=n,
            neighbors=neighbors,
            degrees=degrees,
            edge_count=len(seen),
            adj_sets=adj_sets,
        )

    def has_edge(self, u: int, v: int) -> bool:
        if self.adj_sets is not None:
            return v in self.adj_sets[u]
        return v in self.neighbors[u]

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.edge_count / self.n if self.n else 0.0

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (min, max) pairs in lexicographic order."""
        out = []
        for u, lst in enumerate(self.neighbors):
            for v in lst:
                if u < v:
                    out.append((u, v))
        return out

    def adjacency_matrix(self):
        """Sparse CSR adjacency (built once, cached)."""
        if self._csr is None:
            from scipy.sparse import csr_matrix

            rows, cols = [], []
            for u, lst in enumerate(self.neighbors):
                rows.extend([u] * len(lst))
                cols.extend(lst)
            data = np.ones(len(rows), dtype=np.float64)
            object.__setattr__(
                self, "_csr", csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
            )
        return self._csr


def generate_barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment graph grown from two connected nodes.

    Each new node attaches to m distinct existing nodes drawn with
    probability proportional to current degree (duplicate draws are
    rejected and redrawn); while fewer than m nodes exist, the new node
    attaches to all of them.

    Args:
        n: total node count, at least 2.
        m: edges added per new node, 1 <= m < n.
        seed: RNG seed.
    """
    if n < 2 or m < 1 or m >= n:
        raise ValueError(f"invalid Barabasi-Albert parameters n={n}, m={m}")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = [(0, 1)]
    # One entry per unit of degree; sampling an index uniformly is a
    # degree-proportional node draw.
    repeated: list[int] = [0, 1]
    for v in range(2, n):
        k = min(m, v)
        if k == v:
            targets = list(range(v))
        else:
            chosen: set[int] = set()
            while len(chosen) < k:
                pick = repeated[int(rng.integers(len(repeated)))]
                if pick not in chosen:
                    chosen.add(pick)
            targets = sorted(chosen)
        for u in targets:
            edges.append((u, v))
            repeated.append(u)
        repeated.extend([v] * k)
    return Graph.from_edges(n, edges)


def generate_watts_strogatz(n: int, m: int, p: float, seed: int) -> Graph:
    """Ring lattice with m/2 neighbors per side, each edge rewired w.p. p.

    The rewiring pass scans lattice edges in ring order, nearest offset
    first; a rewired edge keeps its left endpoint and retargets to a
    uniformly drawn node, redrawing on self-loops and duplicates.

    Args:
        n: node count.
        m: even neighbor count, m < n.
        p: rewiring probability in [0, 1].
        seed: RNG seed.
    """
    if m % 2 != 0 or m >= n or m < 0:
        raise ValueError(f"invalid Watts-Strogatz parameters n={n}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    adj: list[set[int]] = [set() for _ in range(n)]
    for j in range(1, m // 2 + 1):
        for i in range(n):
            k = (i + j) % n
            adj[i].add(k)
            adj[k].add(i)
    for j in range(1, m // 2 + 1):
        for i in range(n):
            k = (i + j) % n
            if rng.random() >= p:
                continue
            if len(adj[i]) >= n - 1:
                continue  # no legal retarget exists
            w = int(rng.integers(n))
            while w == i or w in adj[i]:
                w = int(rng.integers(n))
            adj[i].discard(k)
            adj[k].discard(i)
            adj[i].add(w)
            adj[w].add(i)
    return Graph.from_edges(n, ((u, v) for u in range(n) for v in adj[u] if u < v))


DEFAULT_COMMUNITY_SIZES = (100, 3, 4)


def generate_community(
    level_sizes, level_probs, seed: int
) -> Graph:
    """Hierarchical stochastic-block graph.

    ``level_sizes[0]`` is the node count of a lowest-level group;
    ``level_sizes[l]`` for l >= 1 is the number of level-(l-1) groups
    nested in each level-l group. ``level_probs[l]`` is the edge
    probability for a node pair whose deepest shared group sits at level
    l, and the ladder must strictly decrease as the level rises. When
    ``level_sizes`` is None the structure defaults to 4 groups of 3
    groups of 100 nodes (N=1200).

    Args:
        level_sizes: nested group sizes, lowest level first, or None.
        level_probs: per-level edge probabilities, same length.
        seed: RNG seed.
    """
    if level_sizes is None:
        level_sizes = DEFAULT_COMMUNITY_SIZES
    level_sizes = [int(s) for s in level_sizes]
    level_probs = [float(p) for p in level_probs]
    if len(level_sizes) != len(level_probs):
        raise ValueError("level_sizes and level_probs must have equal length")
    if any(s < 1 for s in level_sizes):
        raise ValueError("group sizes must be positive")
    if any(not 0.0 <= p <= 1.0 for p in level_probs):
        raise ValueError("edge probabilities must lie in [0, 1]")
    for lo, hi in zip(level_probs[1:], level_probs[:-1]):
        if lo >= hi:
            raise ValueError("edge probabilities must strictly decrease per level")

    base = level_sizes[0]
    n_groups = 1
    for s in level_sizes[1:]:
        n_groups *= s
    n = base * n_groups
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = []

    def common_level(g1: int, g2: int) -> int:
        """Deepest level at which lowest-groups g1, g2 share a group."""
        if g1 == g2:
            return 0
        level = 1
        for s in level_sizes[1:]:
            g1 //= s
            g2 //= s
            if g1 == g2:
                return level
            level += 1
        return len(level_sizes) - 1  # single implicit root

    # Blocks scanned in lexicographic group order; within a block, pair
    # draws are row-major. This ordering is part of the determinism
    # contract.
    for g1 in range(n_groups):
        for g2 in range(g1, n_groups):
            p = level_probs[common_level(g1, g2)]
            o1, o2 = g1 * base, g2 * base
            if g1 == g2:
                iu, ju = np.triu_indices(base, k=1)
                mask = rng.random(len(iu)) < p
                for a, c in zip(iu[mask], ju[mask]):
                    edges.append((o1 + int(a), o2 + int(c)))
            else:
                draws = rng.random((base, base)) < p
                for a, c in zip(*np.nonzero(draws)):
                    edges.append((o1 + int(a), o2 + int(c)))
    return Graph.from_edges(n, edges)


def generate_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) random graph, a single-level community graph."""
    return generate_community([n], [p], seed)


def load_edge_list(path) -> Graph:
    """Read a whitespace-separated edge list.

    One edge per line; lines starting with '#' are comments. The result
    is symmetrized and deduplicated with self-loops dropped, and node
    ids are compacted to 0..N-1 in order of first appearance.
    """
    ids: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected two node ids")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer node id") from exc
            for w in (u, v):
                if w not in ids:
                    ids[w] = len(ids)
            pairs.append((ids[u], ids[v]))
    return Graph.from_edges(len(ids), pairs)


def save_edge_list(graph: Graph, path) -> None:
    """Write edges as (min, max) pairs in lexicographic order."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")
