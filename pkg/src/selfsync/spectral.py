"""Laplacian eigenstructure, convergence-rate bounds, and the delayed
characteristic-function evaluator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digraph import Connectivity, Laplacian, SccDecomposition, SensorDigraph


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class GammaVector:
    """Left zero-eigenvector of the Laplacian, positive exactly on the root SCC."""

    gamma: np.ndarray
    support: frozenset[int]
    normalization: str  # "sum_one" | "inf_norm_one"


@dataclass(frozen=True)
class RateEstimate:
    value: float
    method: str  # "no_delay_spectrum" | "kappa_bound" | "empirical_fit"
    residual: float = 0.0
    degenerate: bool = False


def zero_eigen_multiplicity(lap: Laplacian, scc: SccDecomposition) -> int:
    """Algebraic multiplicity of eigenvalue 0, counted structurally as the
    number of root components of the condensation."""
    del lap  # structure alone determines the multiplicity
    return len(scc.root_components)


def _left_null_positive(block: np.ndarray, residual_tol: float) -> np.ndarray:
    """Solve g^T block = 0 with sum(g) = 1 for an SC Laplacian block."""
    r = block.shape[0]
    if r == 1:
        return np.ones(1)
    a = np.vstack([block.T, np.ones((1, r))])
    b = np.zeros(r + 1)
    b[-1] = 1.0
    g, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = np.linalg.norm(g @ block, np.inf)
    scale = max(np.linalg.norm(block, np.inf), 1.0)
    if resid > residual_tol * scale:
        raise SpectralError(f"left null-space residual {resid:.3e} exceeds tolerance")
    if np.any(g <= 0.0):
        raise SpectralError(
            f"non-positive entry in root-block eigenvector (min {g.min():.3e})"
        )
    return g


def gamma_left_eigenvector(
    lap: Laplacian,
    scc: SccDecomposition,
    normalization: str = "sum_one",
    residual_tol: float = 1e-10,
) -> GammaVector:
    """Left zero-eigenvector with the root-SCC support structure.

    Computed block-structurally: solve the root-SCC block's left null space
    and pad exact zeros elsewhere.  Requires a single root component.
    """
    if len(scc.root_components) != 1:
        raise SpectralError("no single root component: digraph is not QSC")
    return _gamma_for_component(lap, scc, scc.root_components[0], normalization, residual_tol)


def _gamma_for_component(
    lap: Laplacian,
    scc: SccDecomposition,
    comp_index: int,
    normalization: str = "sum_one",
    residual_tol: float = 1e-10,
) -> GammaVector:
    """Gamma for one root SCC's own Laplacian block (per-cluster variant)."""
    nodes = sorted(scc.components[comp_index])
    idx = np.asarray(nodes, dtype=int)
    block = lap.matrix[np.ix_(idx, idx)]
    g_block = _left_null_positive(block, residual_tol)
    gamma = np.zeros(lap.n)
    gamma[idx] = g_block
    if normalization == "sum_one":
        gamma /= gamma.sum()
    elif normalization == "inf_norm_one":
        gamma /= np.abs(gamma).max()
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    gamma.setflags(write=False)
    return GammaVector(gamma=gamma, support=frozenset(nodes), normalization=normalization)


def gamma_per_cluster(
    lap: Laplacian, scc: SccDecomposition, normalization: str = "sum_one"
) -> dict[int, GammaVector]:
    """One GammaVector per root component, each from its own block."""
    return {
        k: _gamma_for_component(lap, scc, k, normalization)
        for k in scc.root_components
    }


def rate_no_delay(lap: Laplacian, scc: SccDecomposition) -> RateEstimate:
    """Zero-delay rate: minus the smallest nonzero real part of spectrum(L)."""
    if scc.connectivity_class not in (Connectivity.SC, Connectivity.QSC):
        raise SpectralError("rate undefined as a global rate: digraph is not QSC")
    eig = np.linalg.eigvals(lap.matrix)
    scale = max(np.linalg.norm(lap.matrix, np.inf), 1.0)
    nonzero = eig[np.abs(eig) > 1e-9 * scale]
    value = -float(np.min(nonzero.real))
    return RateEstimate(value=value, method="no_delay_spectrum")


def rate_kappa_bound(
    lap: Laplacian, scc: SccDecomposition, gamma: GammaVector
) -> RateEstimate:
    """kappa = -lambda_2( (D_g L + L^T D_g)/2 ), gamma inf-norm one; SC only."""
    if scc.connectivity_class is not Connectivity.SC:
        raise SpectralError("kappa bound is stated for SC digraphs only")
    g = gamma.gamma / np.abs(gamma.gamma).max()
    dg = np.diag(g)
    sym = 0.5 * (dg @ lap.matrix + lap.matrix.T @ dg)
    lam = np.linalg.eigvalsh(sym)
    kappa = -float(lam[1])
    r = rate_no_delay(lap, scc).value
    if r > kappa + 1e-8 * max(abs(kappa), 1.0):
        raise SpectralError(f"rate bound violated: r={r} > kappa={kappa}")
    return RateEstimate(value=kappa, method="kappa_bound")


def characteristic_function(s: complex, g: SensorDigraph, delays, k) -> complex:
    """p(s) = det(sI + Delta - H(s)) for per-node gains k_i = K/c_i.

    Delta = diag(k_i * in_degree(i)); H(s)_ij = k_i a_ij exp(-s tau_ij) off
    the diagonal.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0.0):
        raise ValueError("per-node gains k_i must be positive")
    w = g.weights
    tau = np.asarray(delays.tau, dtype=float)
    h = k[:, None] * w * np.exp(-s * tau)
    np.fill_diagonal(h, 0.0)
    delta = k * w.sum(axis=1)
    mat = np.diag(s + delta).astype(complex) - h
    return complex(np.linalg.det(mat))


def characteristic_scale(g: SensorDigraph, delays, k) -> float:
    """Hadamard-style magnitude bound for |p(0)|, for relative zero tests."""
    k = np.asarray(k, dtype=float)
    w = g.weights
    row = k * (w.sum(axis=1) + np.abs(w).sum(axis=1))
    return float(np.prod(np.maximum(1.0, row)))


def empirical_rate(traj, omega_star, fit_start: float = 0.05) -> RateEstimate:
    """Least-squares slope of log ||xdot(t) - omega*||_inf after the transient.

    The fit window runs from where the error has dropped below half of its
    post-transient peak down to where it nears the numerical floor.
    """
    if traj.clusters is None or not traj.clusters.global_sync:
        raise SpectralError("trajectory has not synchronized (run detect_sync first)")
    omega = np.atleast_1d(np.asarray(omega_star, dtype=float))
    d = traj.derivatives
    if d.ndim == 2:
        err = np.abs(d - omega[None, :]).max(axis=1)
    else:
        err = np.abs(d - omega[None, :, :]).max(axis=(1, 2))
    t = traj.times
    scale = max(np.abs(omega).max(), 1.0)
    if err.max() < 1e-12 * scale:
        return RateEstimate(value=0.0, method="empirical_fit", degenerate=True)
    start = max(int(fit_start * len(err)), 1)
    e0 = err[start:].max()
    floor = max(1e-9 * e0, 1e-13 * scale)
    mask = np.zeros(len(err), dtype=bool)
    mask[start:] = (err[start:] > floor) & (err[start:] < 0.5 * e0)
    if mask.sum() < 10:
        mask[start:] = err[start:] > floor
    if mask.sum() < 2:
        return RateEstimate(value=0.0, method="empirical_fit", degenerate=True)
    x = t[mask]
    y = np.log(err[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateEstimate(value=float(slope), method="empirical_fit", residual=resid)
