"""Zeno products, path-decomposed propagators, half-line boundary dynamics,
and time-of-arrival densities for nonrelativistic quantum mechanics."""

from .arrival import (
    ArrivalDistribution,
    ConvergenceAdvisory,
    MomentumState,
    arrival_moments,
    converged_density,
    current_density_at_origin,
    flux_l1_distance,
    gaussian_momentum_state,
    kijowski_density,
    momentum_grid,
    smeared_density,
    superposition_state,
)
from .halfline import (
    NEUMANN,
    GaussianPacket,
    HalfLineSystem,
    LinePdxParts,
    SpatialGrid,
    WaveFunction,
    build_halfline_hamiltonian,
    free_kernel,
    gaussian_packet,
    grid_zeno_product,
    halfline_eigensystem,
    halfline_norm,
    image_method_propagate,
    line_pdx_residual,
    line_pdx_terms,
    phq_nonzero_check,
    restricted_propagate,
    spectral_evolve_line,
    to_momentum,
    to_position,
    wall_flux,
)
from .histories import (
    BetaScanRow,
    ClassSplit,
    ConsistencyVerdict,
    HistoryPair,
    beta_condition_scan,
    boundary_condition_residuals,
    class_amplitudes,
    consistency_verdict,
    decoherence_line,
    direct_sum_evolve,
    mirror_beta,
    reflection_safe_horizon,
    robin_state_builder,
)
from .qcore import (
    DecoherenceMatrix,
    DomainError,
    NoGoReport,
    Operator,
    PdxTerms,
    TwoStateSystem,
    ZenoSchedule,
    conjugate_time_no_go,
    decoherence_functional,
    decomposition_of_unity_residual,
    evolve,
    pdot,
    pdx_assemble,
    restricted_limit,
    zeno_limit_richardson,
    zeno_product,
)

__version__ = "0.1.0"
