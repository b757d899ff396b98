"""Learning product graphs from multi-attribute graph signals."""

from .centrality import (
    CentralityResult,
    detect_centrality,
    detect_centrality_unfold,
    detection_error_rate,
    positivity_score,
    topk,
)
from .filters import (
    ExactCovariance,
    FilterKind,
    FilterSpec,
    FrequencyResponse,
    apply_filter,
    diffusion_equilibrium,
    exact_covariance,
    filter_matrix,
    fj_equilibrium,
    freq_response,
)
from .graphs import (
    EigDecomp,
    Graph,
    InteractionGraphSpec,
    build_interaction,
    gen_core_periphery,
    gen_erdos_renyi,
    gen_path,
    interaction_matrix,
    max_degree_scale,
    sym_evd,
)
from .signals import (
    CovarianceEstimate,
    SignalBatch,
    population_unfolded,
    read_batch,
    sample_covariances,
    synthesize,
    write_batch,
)
from .spectral import (
    NKDResult,
    SpectralEstimate,
    basis_match_score,
    estimate_nkd,
    estimate_unfold,
    gram_schmidt_dedup,
    nkd,
    rearrange,
    reshape_vec,
)
from .topology import (
    SolveReport,
    SolverOptions,
    SpecTempProblem,
    binarize,
    f1_score,
    interaction_edges,
    reconstruct_interaction,
    solve_spectemp,
)

__version__ = "0.1.0"
