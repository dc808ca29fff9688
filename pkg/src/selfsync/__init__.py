"""Self-synchronizing delayed-integrator consensus: simulation and analysis."""

from .digraph import (
    Connectivity,
    GraphValidationError,
    Laplacian,
    SccDecomposition,
    SensorDigraph,
    degrees,
    from_document,
    is_balanced,
    laplacian,
    new_digraph,
    scc_decompose,
    to_document,
)
from .spectral import (
    GammaVector,
    RateEstimate,
    SpectralError,
    characteristic_function,
    empirical_rate,
    gamma_left_eigenvector,
    gamma_per_cluster,
    rate_kappa_bound,
    rate_no_delay,
    zero_eigen_multiplicity,
)
from .netgen import (
    DelayMatrix,
    NodeGeometry,
    channel_pathloss,
    channel_rayleigh,
    delays_from_geometry,
    place_nodes,
    speed_for_max_delay,
    threshold_prune,
)
from .dde_sim import (
    InitialCondition,
    SimConfig,
    SimulationError,
    SyncCluster,
    SyncResult,
    Trajectory,
    detect_sync,
    detect_sync_auto,
    simulate,
    simulate_noisy,
    simulate_vector,
    trajectory_to_csv,
)
from .protocols import (
    ConsensusPrediction,
    ProtocolError,
    UnbiasReport,
    gamma_estimation_protocol,
    predict_clusters,
    predict_consensus,
    predict_consensus_vector,
    predict_intercepts,
    two_step_unbias,
)
from .stats import (
    GlrtModel,
    LinearObsModel,
    ModelError,
    blue_local,
    centralized_blue,
    consensus_function,
    consensus_function_vector,
    glrt_local,
    glrt_network,
)
from . import topologies

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
