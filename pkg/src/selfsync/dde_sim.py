"""Discrete-time integration of the delayed coupled integrators, plus
synchronization detection on the derivative trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .digraph import SensorDigraph
from .netgen import DelayMatrix


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """Initial state history phi_i on [-tau, 0].

    kind "constant": phi_i(t) = values_i; "linear": phi_i(t) = slopes_i * t +
    intercepts_i; "sampled": linear interpolation of a (times, table) record.
    """

    kind: str = "constant"
    values: np.ndarray | float = 0.0
    slopes: np.ndarray | float = 0.0
    intercepts: np.ndarray | float = 0.0
    sample_times: np.ndarray | None = None
    sample_table: np.ndarray | None = None  # (len(times), n) or (len(times), n, L)

    @staticmethod
    def _expand(arr, n: int, dim: int) -> np.ndarray:
        a = np.asarray(arr, dtype=float)
        if a.ndim == 1 and a.shape[0] == n:
            a = a[:, None]  # per-node values, common across coordinates
        return np.broadcast_to(a, (n, dim))

    def evaluate(self, t: float, n: int, dim: int) -> np.ndarray:
        out = np.zeros((n, dim))
        if self.kind == "constant":
            out[:] = self._expand(self.values, n, dim)
        elif self.kind == "linear":
            a = self._expand(self.slopes, n, dim)
            b = self._expand(self.intercepts, n, dim)
            out[:] = a * t + b
        elif self.kind == "sampled":
            ts = np.asarray(self.sample_times, dtype=float)
            table = np.asarray(self.sample_table, dtype=float)
            if table.ndim == 2:
                table = table[:, :, None]
            for q in range(dim):
                for i in range(n):
                    out[i, q] = np.interp(t, ts, table[:, i, q])
        else:
            raise ValueError(f"unknown initial-condition kind {self.kind!r}")
        return out


@dataclass(frozen=True)
class SimConfig:
    t_step: float = 1e-3
    k_gain: float = 1.0
    c_weights: np.ndarray | float = 1.0
    horizon: int = 5000
    init: InitialCondition = field(default_factory=InitialCondition)
    noise_std: float = 0.0
    rng_seed: int = 0
    sync_tol_rel: float = 1e-4  # tolerance as a fraction of |omega*| scale
    sync_window_frac: float = 0.1

    def __post_init__(self):
        if self.t_step <= 0:
            raise ValueError("t_step must be positive")
        if self.k_gain <= 0:
            raise ValueError("coupling gain K must be positive")
        if np.any(np.asarray(self.c_weights) <= 0):
            raise ValueError("coefficients c_i must be positive")

    def c_array(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.c_weights, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class SyncCluster:
    nodes: frozenset[int]
    value: np.ndarray  # scalar stored as shape (), vector as (L,)
    detection_time: float


@dataclass
class SyncResult:
    clusters: list[SyncCluster]
    unclustered: frozenset[int]
    global_sync: bool
    tol: float
    window: int


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (horizon+1, n) scalar or (horizon+1, n, L)
    derivatives: np.ndarray  # RHS values at each sample, same shape as states
    t_step: float
    clusters: SyncResult | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def is_vector(self) -> bool:
        return self.states.ndim == 3


def _lag_matrix(g: SensorDigraph, delays: DelayMatrix, t_step: float) -> np.ndarray:
    m = np.rint(delays.tau / t_step).astype(int)
    m[g.weights <= 0.0] = 0
    np.fill_diagonal(m, 0)
    return m


def _simulate_core(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    kq: np.ndarray,  # (n, L, L) per-node K * Q_i^{-1}
    g_vals: np.ndarray,  # (n, L)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = g.n
    dim = g_vals.shape[1]
    w = g.weights
    indeg = w.sum(axis=1)
    # explicit-Euler stability heuristic
    gain = np.array([np.linalg.eigvalsh(0.5 * (kq[i] + kq[i].T)).max() for i in range(n)])
    bad = np.flatnonzero(cfg.t_step * gain * indeg >= 2.0)
    if bad.size:
        i = int(bad[0])
        raise SimulationError(
            f"step-size instability: T_s * k_{i} * in_degree({i}) = "
            f"{cfg.t_step * gain[i] * indeg[i]:.3f} >= 2"
        )
    m = _lag_matrix(g, delays, cfg.t_step)
    mmax = int(m.max()) if m.size else 0
    horizon = cfg.horizon
    x = np.empty((mmax + horizon + 1, n, dim))
    for h in range(mmax + 1):
        x[h] = cfg.init.evaluate((h - mmax) * cfg.t_step, n, dim)
    deriv = np.empty((horizon + 1, n, dim))
    cols = np.arange(n)[None, :]
    rng = np.random.default_rng(cfg.rng_seed) if cfg.noise_std > 0 else None
    for step in range(horizon + 1):
        cur = mmax + step
        delayed = x[cur - m, cols]  # (n, n, dim): delayed[i, j] = x_j(t - tau_ij)
        coup = np.einsum("ij,ijl->il", w, delayed) - indeg[:, None] * x[cur]
        rhs = g_vals + np.einsum("ilm,im->il", kq, coup)
        if rng is not None:
            rhs = rhs + rng.normal(0.0, cfg.noise_std, size=(n, dim))
        deriv[step] = rhs
        if step < horizon:
            x[cur + 1] = x[cur] + cfg.t_step * rhs
            if not np.all(np.isfinite(x[cur + 1])):
                raise SimulationError(f"non-finite state at step {step + 1}")
    return np.arange(horizon + 1) * cfg.t_step, x[mmax:], deriv


def simulate(
    g: SensorDigraph, delays: DelayMatrix, cfg: SimConfig, g_values
) -> Trajectory:
    """Forward-Euler run of the scalar coupled system with per-link lags
    m_ij = round(tau_ij / T_s)."""
    g_vals = np.broadcast_to(np.asarray(g_values, dtype=float), (g.n,))
    c = cfg.c_array(g.n)
    q = c.reshape(g.n, 1, 1)
    kq = cfg.k_gain * np.linalg.inv(q)
    times, states, deriv = _simulate_core(g, delays, cfg, kq, g_vals[:, None].copy())
    return Trajectory(
        times=times,
        states=states[:, :, 0],
        derivatives=deriv[:, :, 0],
        t_step=cfg.t_step,
    )


def simulate_noisy(
    g: SensorDigraph, delays: DelayMatrix, cfg: SimConfig, g_values, noise_std: float
) -> Trajectory:
    """Scalar run with i.i.d. Gaussian coupling noise on the derivative stream;
    the state evolves on the noisy values."""
    if noise_std < 0:
        raise ValueError("noise std must be nonnegative")
    return simulate(g, delays, replace(cfg, noise_std=noise_std), g_values)


def simulate_vector(
    g: SensorDigraph, delays: DelayMatrix, cfg: SimConfig, q_mats, g_vecs
) -> Trajectory:
    """Vector-state run: xdot_i = g_i + K Q_i^{-1} sum_j a_ij (x_j(t-tau_ij) - x_i)."""
    q = np.asarray(q_mats, dtype=float)
    gv = np.asarray(g_vecs, dtype=float)
    if q.ndim != 3 or q.shape[0] != g.n or q.shape[1] != q.shape[2]:
        raise ValueError(f"q_mats must have shape (n, L, L), got {q.shape}")
    if gv.shape != (g.n, q.shape[1]):
        raise ValueError(f"g_vecs shape {gv.shape} does not match (n, L)")
    for i in range(g.n):
        sym = 0.5 * (q[i] + q[i].T)
        if not np.allclose(q[i], q[i].T) or np.linalg.eigvalsh(sym).min() <= 0:
            raise ValueError(f"Q matrix of node {i} is not symmetric positive definite")
    kq = cfg.k_gain * np.linalg.inv(q)
    times, states, deriv = _simulate_core(g, delays, cfg, kq, gv)
    return Trajectory(times=times, states=states, derivatives=deriv, t_step=cfg.t_step)


def detect_sync(
    traj: Trajectory, tol: float, window: int, min_cluster_size: int = 2
) -> SyncResult:
    """Partition nodes into groups whose derivatives over the final window are
    pairwise within tol and individually stationary.

    Singleton groups count as clusters only for a one-node system; a cluster
    containing every node sets the global flag.
    """
    if window > len(traj.times):
        raise ValueError("window longer than trajectory")
    if window < 1:
        raise ValueError("window must hold at least one sample")
    d = traj.derivatives[-window:]
    if d.ndim == 2:
        d = d[:, :, None]
    n = d.shape[1]
    means = d.mean(axis=0)  # (n, L)
    stationary = np.abs(d - means[None]).max(axis=(0, 2)) <= tol
    idx = np.flatnonzero(stationary)
    # connected components of the "within tol" relation among stationary nodes
    parent = {int(i): int(i) for i in idx}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ai in range(len(idx)):
        for bi in range(ai + 1, len(idx)):
            a, b = int(idx[ai]), int(idx[bi])
            if np.abs(means[a] - means[b]).max() <= tol:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for i in idx:
        groups.setdefault(find(int(i)), []).append(int(i))
    t_detect = float(traj.times[-window])
    clusters = []
    clustered: set[int] = set()
    for nodes in groups.values():
        if len(nodes) >= min_cluster_size or n == 1:
            value = means[nodes].mean(axis=0)
            if traj.derivatives.ndim == 2:
                value = value[0]
            clusters.append(
                SyncCluster(
                    nodes=frozenset(nodes),
                    value=np.asarray(value),
                    detection_time=t_detect,
                )
            )
            clustered.update(nodes)
    clusters.sort(key=lambda c: min(c.nodes))
    result = SyncResult(
        clusters=clusters,
        unclustered=frozenset(range(n)) - frozenset(clustered),
        global_sync=any(len(c.nodes) == n for c in clusters),
        tol=tol,
        window=window,
    )
    traj.clusters = result
    return result


def detect_sync_auto(
    traj: Trajectory, cfg: SimConfig, omega_scale: float
) -> SyncResult:
    """detect_sync with config-derived tolerance and window."""
    tol = cfg.sync_tol_rel * max(abs(omega_scale), 1e-12)
    window = max(int(cfg.sync_window_frac * len(traj.times)), 2)
    return detect_sync(traj, tol=tol, window=window)


def trajectory_to_csv(traj: Trajectory, path, downsample: int = 1) -> None:
    """CSV trace with header (t, x_1..x_n, dx_1..dx_n); vector states flatten
    coordinate-major."""
    states = traj.states.reshape(len(traj.times), -1)
    deriv = traj.derivatives.reshape(len(traj.times), -1)
    cols = states.shape[1]
    header = ",".join(
        ["t"] + [f"x_{k + 1}" for k in range(cols)] + [f"dx_{k + 1}" for k in range(cols)]
    )
    data = np.column_stack([traj.times, states, deriv])[::downsample]
    np.savetxt(path, data, delimiter=",", header=header, comments="")
