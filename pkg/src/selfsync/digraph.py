"""Weighted directed sensor graphs and their structural decomposition.

Edge convention: ``weights[i, j]`` is the amplitude on the link carrying data
from transmitter j to receiver i.  Reachability ("node r reaches node i")
therefore follows the data flow, i.e. along nonzero entries of column j into
row i.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class GraphValidationError(ValueError):
    """Raised when a weight matrix violates the sensor-digraph contract."""


class Connectivity(str, Enum):
    SC = "SC"
    QSC = "QSC"
    WC = "WC"
    DISCONNECTED = "Disconnected"


@dataclass(frozen=True)
class SensorDigraph:
    """Immutable weighted digraph; row i = receiver, column j = transmitter."""

    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def neighbor_sets(self) -> list[set[int]]:
        """N_i = set of transmitters node i hears (a_ij > 0)."""
        return [set(np.flatnonzero(self.weights[i] > 0.0)) for i in range(self.n)]


@dataclass(frozen=True)
class Laplacian:
    matrix: np.ndarray
    degree_matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SccDecomposition:
    components: list[frozenset[int]]
    condensation_edges: set[tuple[int, int]]
    topo_order: list[int]
    root_components: list[int]
    connectivity_class: Connectivity

    @property
    def n_components(self) -> int:
        return len(self.components)

    def root_nodes(self) -> list[frozenset[int]]:
        return [self.components[k] for k in self.root_components]


def new_digraph(weights) -> SensorDigraph:
    """Validate a square nonnegative weight matrix and wrap it."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise GraphValidationError(f"weights must be square, got shape {w.shape}")
    neg = np.argwhere(w < 0.0)
    if neg.size:
        i, j = neg[0]
        raise GraphValidationError(f"negative weight a[{i},{j}] = {w[i, j]}")
    diag = np.argwhere(np.diag(w) != 0.0)
    if diag.size:
        i = int(diag[0][0])
        raise GraphValidationError(f"nonzero diagonal entry a[{i},{i}] = {w[i, i]}")
    w = w.copy()
    w.setflags(write=False)
    return SensorDigraph(weights=w)


def degrees(g: SensorDigraph) -> tuple[np.ndarray, np.ndarray]:
    """(in_degrees, out_degrees): row sums and column sums of the weights."""
    return g.weights.sum(axis=1), g.weights.sum(axis=0)


def is_balanced(g: SensorDigraph, tol: float = 1e-12) -> bool:
    din, dout = degrees(g)
    return bool(np.all(np.abs(din - dout) <= tol))


def laplacian(g: SensorDigraph) -> Laplacian:
    """L = Delta - A with in-degree diagonal; rows sum to zero to machine precision."""
    a = g.weights
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    deg = off.sum(axis=1)
    lap = -off
    # diagonal set to the row sum of the off-diagonals so L @ 1 vanishes
    idx = np.arange(g.n)
    lap[idx, idx] = deg
    return Laplacian(matrix=lap, degree_matrix=np.diag(deg))


def _tarjan_scc(adj: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan on adjacency lists adj[u] = successors of u."""
    n = len(adj)
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            u, pi = work[-1]
            if pi == 0:
                index[u] = lowlink[u] = counter
                counter += 1
                stack.append(u)
                on_stack[u] = True
            advanced = False
            for k in range(pi, len(adj[u])):
                v = adj[u][k]
                if index[v] == -1:
                    work[-1] = (u, k + 1)
                    work.append((v, 0))
                    advanced = True
                    break
                if on_stack[v]:
                    lowlink[u] = min(lowlink[u], index[v])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[u])
            if lowlink[u] == index[u]:
                comp = []
                while True:
                    v = stack.pop()
                    on_stack[v] = False
                    comp.append(v)
                    if v == u:
                        break
                sccs.append(sorted(comp))
    return sccs


def scc_decompose(g: SensorDigraph) -> SccDecomposition:
    """SCC partition, condensation digraph, topological order, connectivity class.

    A condensation edge (a, b) means data flows from component b into
    component a; root components have zero in-degree (no data from outside).
    """
    n = g.n
    w = g.weights
    # successors in data-flow direction: j -> i when a_ij > 0
    adj = [[int(i) for i in np.flatnonzero(w[:, j] > 0.0)] for j in range(n)]
    comps = _tarjan_scc(adj)
    comp_of = np.empty(n, dtype=int)
    for k, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = k
    edges: set[tuple[int, int]] = set()
    rows, cols = np.nonzero(w > 0.0)
    for i, j in zip(rows, cols):
        a, b = comp_of[i], comp_of[j]
        if a != b:
            edges.add((a, b))  # data flows b -> a
    k_comp = len(comps)
    indeg = [0] * k_comp
    flow_succ: list[list[int]] = [[] for _ in range(k_comp)]
    for a, b in edges:
        indeg[a] += 1
        flow_succ[b].append(a)
    roots = [k for k in range(k_comp) if indeg[k] == 0]
    # Kahn topological sort along data flow: upstream components first
    topo: list[int] = []
    remaining = indeg[:]
    frontier = sorted(roots)
    while frontier:
        u = frontier.pop(0)
        topo.append(u)
        for v in sorted(flow_succ[u]):
            remaining[v] -= 1
            if remaining[v] == 0:
                frontier.append(v)
    assert len(topo) == k_comp, "condensation digraph must be acyclic"

    if k_comp == 1:
        cls = Connectivity.SC
    elif len(roots) == 1:
        cls = Connectivity.QSC
    else:
        cls = Connectivity.WC if _weakly_connected(w) else Connectivity.DISCONNECTED
    return SccDecomposition(
        components=[frozenset(c) for c in comps],
        condensation_edges=edges,
        topo_order=topo,
        root_components=sorted(roots),
        connectivity_class=cls,
    )


def _weakly_connected(w: np.ndarray) -> bool:
    n = w.shape[0]
    if n <= 1:
        return True
    sym = (w > 0.0) | (w.T > 0.0)
    seen = np.zeros(n, dtype=bool)
    queue = [0]
    seen[0] = True
    while queue:
        u = queue.pop()
        nxt = np.flatnonzero(sym[u] & ~seen)
        seen[nxt] = True
        queue.extend(nxt.tolist())
    return bool(seen.all())


def to_document(g: SensorDigraph) -> str:
    """Serialize as JSON {n, edges: [[i, j, a_ij]]}, row-major edge order."""
    rows, cols = np.nonzero(g.weights > 0.0)
    edges = [[int(i), int(j), float(g.weights[i, j])] for i, j in zip(rows, cols)]
    return json.dumps({"n": g.n, "edges": edges}, indent=1)


def from_document(text: str) -> SensorDigraph:
    doc = json.loads(text)
    n = int(doc["n"])
    w = np.zeros((n, n))
    for i, j, a in doc["edges"]:
        w[int(i), int(j)] = float(a)
    return new_digraph(w)
