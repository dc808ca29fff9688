"""Reference and random topologies for experiments and tests."""

from __future__ import annotations

import numpy as np

from .digraph import SensorDigraph, new_digraph


def _ring(w: np.ndarray, nodes: list[int], weight: float = 1.0) -> None:
    # data flows around the cycle: node k+1 hears node k
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        w[b, a] = weight


def sc_14() -> SensorDigraph:
    """Strongly connected 14-node digraph: directed ring plus unbalancing chords."""
    w = np.zeros((14, 14))
    _ring(w, list(range(14)))
    w[5, 0] = 2.0
    w[11, 3] = 1.5
    w[2, 9] = 0.8
    return new_digraph(w)


def qsc_three_scc_14() -> SensorDigraph:
    """QSC 14-node digraph with three SCCs chained from a single root SCC."""
    w = np.zeros((14, 14))
    _ring(w, [0, 1, 2, 3, 4, 5])
    _ring(w, [6, 7, 8, 9])
    _ring(w, [10, 11, 12, 13])
    w[3, 1] = 1.2  # chord inside the root SCC (unbalanced root)
    w[6, 0] = 1.0  # root -> middle SCC
    w[8, 4] = 0.7
    w[10, 7] = 1.0  # middle -> leaf SCC
    return new_digraph(w)


def wc_two_root_14() -> SensorDigraph:
    """Weakly connected 14-node digraph: two root SCCs feeding a middle SCC.

    Every middle node hears two transmitters with distinct mixing ratios, so
    the middle nodes settle on pairwise-distinct derivatives and form no
    synchronization cluster of their own.
    """
    w = np.zeros((14, 14))
    _ring(w, [0, 1, 2, 3, 4])
    _ring(w, [5, 6, 7, 8, 9])
    _ring(w, [10, 11, 12, 13])
    w[2, 4] = 1.3  # chord in the first root
    w[10, 0] = 1.0  # first root -> middle
    w[11, 6] = 0.8  # second root -> middle
    w[12, 5] = 1.1
    w[13, 2] = 0.7
    return new_digraph(w)


def random_qsc(n: int, rng: np.random.Generator, extra_edge_prob: float = 0.25) -> SensorDigraph:
    """Random QSC digraph: an SC core that reaches every other node, plus
    random extra edges (edge additions preserve quasi-strong connectivity)."""
    root_size = int(rng.integers(1, n + 1))
    order = rng.permutation(n)
    w = np.zeros((n, n))
    root = [int(v) for v in order[:root_size]]
    if root_size > 1:
        for a, b in zip(root, root[1:] + root[:1]):
            w[b, a] = rng.uniform(0.5, 1.5)
    for pos, v in enumerate(order[root_size:]):
        u = int(order[int(rng.integers(0, root_size + pos))])
        w[int(v), u] = rng.uniform(0.5, 1.5)
    # extra random edges: QSC is preserved under edge addition
    _add_random_edges(w, rng, extra_edge_prob)
    return new_digraph(w)


def _add_random_edges(w: np.ndarray, rng: np.random.Generator, prob: float) -> None:
    mask = rng.random(w.shape) < prob
    np.fill_diagonal(mask, False)
    mask &= w == 0.0
    w[mask] = rng.uniform(0.5, 1.5, size=int(mask.sum()))


def random_sc(n: int, rng: np.random.Generator, extra_edge_prob: float = 0.3) -> SensorDigraph:
    """Random strongly connected digraph with generically unbalanced weights."""
    order = [int(v) for v in rng.permutation(n)]
    w = np.zeros((n, n))
    for a, b in zip(order, order[1:] + order[:1]):
        w[b, a] = rng.uniform(0.5, 1.5)
    _add_random_edges(w, rng, extra_edge_prob)
    return new_digraph(w)


def random_wc_multiroot(
    n: int, rng: np.random.Generator, n_roots: int = 2
) -> SensorDigraph:
    """Weakly connected, not QSC: n_roots disjoint SC cores all feeding a
    shared set of downstream nodes."""
    if n < 3 * n_roots:
        raise ValueError("need at least three nodes per root plus sinks")
    order = [int(v) for v in rng.permutation(n)]
    w = np.zeros((n, n))
    core_size = 2
    cores = [order[k * core_size : (k + 1) * core_size] for k in range(n_roots)]
    rest = order[n_roots * core_size :]
    for core in cores:
        for a, b in zip(core, core[1:] + core[:1]):
            w[b, a] = rng.uniform(0.5, 1.5)
    for pos, v in enumerate(rest):
        if pos < n_roots:  # every core feeds at least one downstream node
            u = cores[pos][0]
        else:
            u = rest[int(rng.integers(0, pos))]
        w[v, u] = rng.uniform(0.5, 1.5)
    # ensure some downstream node hears every core so the skeleton is connected
    for core in cores[1:]:
        w[rest[0], core[-1]] = rng.uniform(0.5, 1.5)
    return new_digraph(w)


def random_digraph(n: int, rng: np.random.Generator, edge_prob: float = 0.3) -> SensorDigraph:
    """Unconstrained random digraph (any connectivity class)."""
    w = rng.uniform(0.5, 1.5, size=(n, n))
    keep = rng.random((n, n)) < edge_prob
    w[~keep] = 0.0
    np.fill_diagonal(w, 0.0)
    return new_digraph(w)
