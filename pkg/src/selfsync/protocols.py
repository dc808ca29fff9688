"""Closed-form consensus prediction and the bias-removal protocols."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import spectral
from .dde_sim import SimConfig, detect_sync_auto, simulate
from .digraph import SensorDigraph, laplacian, scc_decompose
from .netgen import DelayMatrix


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConsensusPrediction:
    omega_star: float | np.ndarray | None
    per_cluster: dict[int, tuple[frozenset[int], float]] | None
    unpredicted: frozenset[int]
    gamma_used: spectral.GammaVector | dict[int, spectral.GammaVector]
    numerator: float | np.ndarray
    gamma_c_sum: float | np.ndarray
    delay_term: float


@dataclass(frozen=True)
class UnbiasReport:
    omega_y: float
    omega_one: float
    ratio: float
    mode: str
    gamma_tilde: np.ndarray | None = None
    compensated_c: np.ndarray | None = None


def _effective_tau(delays: DelayMatrix, cfg: SimConfig, quantize: bool) -> np.ndarray:
    tau = np.asarray(delays.tau, dtype=float)
    if quantize:
        tau = np.rint(tau / cfg.t_step) * cfg.t_step
    return tau


def _delay_term(
    g: SensorDigraph, tau: np.ndarray, gamma: np.ndarray, k_gain: float
) -> float:
    return float(k_gain * np.sum(gamma[:, None] * g.weights * tau))


def predict_consensus(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    quantize_delays: bool = False,
) -> ConsensusPrediction:
    """Global synchronized derivative for a QSC digraph.

    With quantize_delays the link delays are rounded to the sampling grid,
    matching what the discrete-time integrator actually honors.
    """
    scc = scc_decompose(g)
    if len(scc.root_components) != 1:
        raise ProtocolError("global consensus not guaranteed: digraph is not QSC")
    lap = laplacian(g)
    gamma = spectral.gamma_left_eigenvector(lap, scc)
    c = cfg.c_array(g.n)
    gvals = np.broadcast_to(np.asarray(g_values, dtype=float), (g.n,))
    tau = _effective_tau(delays, cfg, quantize_delays)
    num = float(np.sum(gamma.gamma * c * gvals))
    den1 = float(np.sum(gamma.gamma * c))
    den2 = _delay_term(g, tau, gamma.gamma, cfg.k_gain)
    return ConsensusPrediction(
        omega_star=num / (den1 + den2),
        per_cluster=None,
        unpredicted=frozenset(),
        gamma_used=gamma,
        numerator=num,
        gamma_c_sum=den1,
        delay_term=den2,
    )


def predict_clusters(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    quantize_delays: bool = False,
) -> ConsensusPrediction:
    """Per-root-SCC synchronized values; nodes outside every root SCC are
    reported as unpredicted."""
    scc = scc_decompose(g)
    lap = laplacian(g)
    gammas = spectral.gamma_per_cluster(lap, scc)
    c = cfg.c_array(g.n)
    gvals = np.broadcast_to(np.asarray(g_values, dtype=float), (g.n,))
    tau = _effective_tau(delays, cfg, quantize_delays)
    per_cluster = {}
    covered: set[int] = set()
    for k, gam in gammas.items():
        num = float(np.sum(gam.gamma * c * gvals))
        den = float(np.sum(gam.gamma * c)) + _delay_term(g, tau, gam.gamma, cfg.k_gain)
        per_cluster[k] = (scc.components[k], num / den)
        covered.update(scc.components[k])
    omega = None
    if len(per_cluster) == 1:
        omega = next(iter(per_cluster.values()))[1]
    return ConsensusPrediction(
        omega_star=omega,
        per_cluster=per_cluster,
        unpredicted=frozenset(range(g.n)) - frozenset(covered),
        gamma_used=gammas,
        numerator=float("nan"),
        gamma_c_sum=float("nan"),
        delay_term=float("nan"),
    )


def predict_consensus_vector(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    q_mats,
    g_vecs,
    quantize_delays: bool = False,
) -> ConsensusPrediction:
    """Vector synchronized derivative:
    (sum_i gamma_i Q_i + I_L * delay term)^{-1} sum_i gamma_i Q_i g_i."""
    scc = scc_decompose(g)
    if len(scc.root_components) != 1:
        raise ProtocolError("global consensus not guaranteed: digraph is not QSC")
    lap = laplacian(g)
    gamma = spectral.gamma_left_eigenvector(lap, scc)
    q = np.asarray(q_mats, dtype=float)
    gv = np.asarray(g_vecs, dtype=float)
    dim = q.shape[1]
    tau = _effective_tau(delays, cfg, quantize_delays)
    den2 = _delay_term(g, tau, gamma.gamma, cfg.k_gain)
    lhs = np.einsum("i,ilm->lm", gamma.gamma, q) + den2 * np.eye(dim)
    rhs = np.einsum("i,ilm,im->l", gamma.gamma, q, gv)
    try:
        omega = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise ProtocolError(f"singular combined matrix: {exc}") from exc
    return ConsensusPrediction(
        omega_star=omega,
        per_cluster=None,
        unpredicted=frozenset(),
        gamma_used=gamma,
        numerator=rhs,
        gamma_c_sum=np.einsum("i,ilm->lm", gamma.gamma, q),
        delay_term=den2,
    )


def _consensus_value(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    mode: str,
) -> float:
    """One protocol pass: exact prediction or a full simulated measurement."""
    pred = predict_consensus(g, delays, cfg, g_values, quantize_delays=(mode == "simulate"))
    if mode == "predict":
        return float(pred.omega_star)
    if mode != "simulate":
        raise ValueError(f"unknown protocol mode {mode!r}")
    traj = simulate(g, delays, cfg, g_values)
    sync = detect_sync_auto(traj, cfg, omega_scale=float(pred.omega_star))
    if not sync.global_sync:
        raise ProtocolError("simulation pass did not reach global synchronization")
    return float(next(c.value for c in sync.clusters if len(c.nodes) == g.n))


def two_step_unbias(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    mode: str = "predict",
) -> UnbiasReport:
    """Run with true forcings and with g = 1 and take the ratio; the delay and
    channel denominator cancels."""
    omega_y = _consensus_value(g, delays, cfg, g_values, mode)
    omega_one = _consensus_value(g, delays, cfg, np.ones(g.n), mode)
    if abs(omega_one) < 1e-300:
        raise ProtocolError("unit-forcing consensus is numerically zero")
    return UnbiasReport(
        omega_y=omega_y, omega_one=omega_one, ratio=omega_y / omega_one, mode=mode
    )


def gamma_estimation_protocol(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    mode: str = "predict",
) -> UnbiasReport:
    """(N_r + 1)-pass estimation of the normalized left eigenvector, followed
    by c-compensation and a final two-step ratio.

    All estimation passes run with c = 1; nodes outside the root SCC keep
    gamma_tilde = 0 and their original c.
    """
    scc = scc_decompose(g)
    if len(scc.root_components) != 1:
        raise ProtocolError("protocol requires a QSC digraph")
    root_nodes = sorted(scc.components[scc.root_components[0]])
    cfg_unit = replace(cfg, c_weights=1.0)
    omega_one = _consensus_value(g, delays, cfg_unit, np.ones(g.n), mode)
    gamma_tilde = np.zeros(g.n)
    for i in root_nodes:
        e_i = np.zeros(g.n)
        e_i[i] = 1.0
        gamma_tilde[i] = _consensus_value(g, delays, cfg_unit, e_i, mode) / omega_one
    c = cfg.c_array(g.n)
    compensated = c.copy()
    pos = gamma_tilde > 0
    compensated[pos] = c[pos] / gamma_tilde[pos]
    # uniform rescaling leaves the final ratio invariant; restore the original
    # geometric mean so per-node gains K/c_i stay in a workable range
    scale = np.exp(np.log(c[pos]).mean() - np.log(compensated[pos]).mean())
    compensated[pos] *= scale
    cfg_comp = replace(cfg, c_weights=compensated)
    final = two_step_unbias(g, delays, cfg_comp, g_values, mode=mode)
    return UnbiasReport(
        omega_y=final.omega_y,
        omega_one=final.omega_one,
        ratio=final.ratio,
        mode=mode,
        gamma_tilde=gamma_tilde,
        compensated_c=compensated,
    )


def predict_intercepts(
    g: SensorDigraph,
    delays: DelayMatrix,
    cfg: SimConfig,
    g_values,
    quantize_delays: bool = False,
) -> np.ndarray:
    """Minimum-norm intercepts of the straight-line solution x*(t) = w* t + x0,
    via the generalized inverse of the Laplacian."""
    scc = scc_decompose(g)
    if len(scc.root_components) != 1:
        raise ProtocolError("intercepts defined for QSC digraphs only")
    pred = predict_consensus(g, delays, cfg, g_values, quantize_delays=quantize_delays)
    omega = float(pred.omega_star)
    c = cfg.c_array(g.n)
    gvals = np.broadcast_to(np.asarray(g_values, dtype=float), (g.n,))
    tau = _effective_tau(delays, cfg, quantize_delays)
    delay_load = (g.weights * tau).sum(axis=1)  # sum_j a_ij tau_ij per receiver
    delta_omega = gvals - omega * (1.0 + cfg.k_gain / c * delay_load)
    lap = laplacian(g)
    return (1.0 / cfg.k_gain) * np.linalg.pinv(lap.matrix) @ (c * delta_omega)
