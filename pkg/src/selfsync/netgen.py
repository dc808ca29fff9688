"""Scenario generation: node geometry, fading channels, delays, thresholding."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .digraph import SensorDigraph, new_digraph


@dataclass(frozen=True)
class NodeGeometry:
    positions: np.ndarray  # (n, 2), inside [0, d_side]^2
    distances: np.ndarray  # (n, n) Euclidean, symmetric, zero diagonal
    powers: np.ndarray  # (n,) transmit powers P_j > 0
    path_loss_exponent: float = 2.0
    speed: float = 1.0  # propagation speed (length/time)
    offsets: np.ndarray | None = None  # (n, n) time offsets T_ij >= 0

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class DelayMatrix:
    tau: np.ndarray  # (n, n) nonnegative link delays

    @property
    def tau_max(self) -> float:
        return float(self.tau.max()) if self.tau.size else 0.0

    @classmethod
    def uniform(cls, n: int, tau: float) -> "DelayMatrix":
        t = np.full((n, n), float(tau))
        np.fill_diagonal(t, 0.0)
        return cls(tau=t)

    @classmethod
    def zero(cls, n: int) -> "DelayMatrix":
        return cls(tau=np.zeros((n, n)))


def place_nodes(
    n: int,
    d_side: float,
    rng_seed: int,
    powers=1.0,
    path_loss_exponent: float = 2.0,
    speed: float = 1.0,
) -> NodeGeometry:
    """n i.i.d. uniform positions on [0, d_side]^2, deterministic under seed."""
    if n < 1:
        raise ValueError("need at least one node")
    if d_side <= 0:
        raise ValueError("square side must be positive")
    rng = np.random.default_rng(rng_seed)
    pos = rng.uniform(0.0, d_side, size=(n, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    p = np.broadcast_to(np.asarray(powers, dtype=float), (n,)).copy()
    if np.any(p <= 0):
        raise ValueError("transmit powers must be positive")
    return NodeGeometry(
        positions=pos,
        distances=dist,
        powers=p,
        path_loss_exponent=path_loss_exponent,
        speed=speed,
    )


def speed_for_max_delay(geom: NodeGeometry, tau_max: float) -> NodeGeometry:
    """Rescale the propagation speed so the largest link delay equals tau_max."""
    dmax = geom.distances.max()
    if dmax <= 0 or tau_max <= 0:
        raise ValueError("need distinct nodes and tau_max > 0")
    return replace(geom, speed=dmax / tau_max)


def _link_rng(seed: int, i: int, j: int) -> np.random.Generator:
    # per-link substream: pruning or reordering one link leaves others intact
    return np.random.default_rng(np.random.SeedSequence([seed, i, j]))


def channel_rayleigh(geom: NodeGeometry, rng_seed: int) -> SensorDigraph:
    """a_ij i.i.d. Rayleigh with second moment P_j / (1 + d_ij^2).

    Rayleigh scale chosen as E[a^2] = 2 s^2 = P_j/(1+d^2); the amplitude
    second moment matches the fading "variance" convention.
    """
    n = geom.n
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            sigma2 = geom.powers[j] / (1.0 + geom.distances[i, j] ** 2)
            w[i, j] = _link_rng(rng_seed, i, j).rayleigh(np.sqrt(sigma2 / 2.0))
    return new_digraph(w)


def channel_pathloss(geom: NodeGeometry, fading) -> SensorDigraph:
    """Deterministic amplitudes a_ij = sqrt(P_j |h_ij|^2 / d_ij^eta)."""
    n = geom.n
    h = np.broadcast_to(np.asarray(fading, dtype=float), (n, n))
    off = ~np.eye(n, dtype=bool)
    if np.any(geom.distances[off] == 0.0):
        raise ValueError(
            "zero distance between distinct nodes: path-loss formula is singular"
        )
    w = np.zeros((n, n))
    d = np.where(off, geom.distances, 1.0)
    w[off] = np.sqrt(
        geom.powers[None, :].repeat(n, axis=0)[off]
        * h[off] ** 2
        / d[off] ** geom.path_loss_exponent
    )
    return new_digraph(w)


def threshold_prune(g: SensorDigraph, min_amplitude: float) -> SensorDigraph:
    """Zero every weight below min_amplitude."""
    if min_amplitude < 0:
        raise ValueError("threshold must be nonnegative")
    w = g.weights.copy()
    w[w < min_amplitude] = 0.0
    return new_digraph(w)


def delays_from_geometry(geom: NodeGeometry) -> DelayMatrix:
    """tau_ij = T_ij + d_ij / speed."""
    tau = geom.distances / geom.speed
    if geom.offsets is not None:
        off = np.asarray(geom.offsets, dtype=float)
        if np.any(off < 0):
            raise ValueError("time offsets must be nonnegative")
        tau = tau + off
    np.fill_diagonal(tau, 0.0)
    return DelayMatrix(tau=tau)
