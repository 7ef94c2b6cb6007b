"""Numerical laboratory for repeated impulsive position measurements on a
1-D harmonic oscillator.

Three independent engines compute the effective uncertainty of each
measurement in a stroboscopic sequence: closed-form Gaussian packet
propagation, a Crank-Nicolson grid solver with explicit non-Hermitian
measurement gates, and eigenbasis filter-matrix chains.
"""

from .collapse import (
    GridCoverageError,
    OutcomeDistribution,
    apply_impulsive,
    outcome_amplitudes,
    outcome_distribution,
)
from .gaussian_analytic import (
    GaussianPacket,
    WidthRecord,
    critical_time,
    evolve_free,
    evolve_measured,
    impulsive_uncertainty,
    stroboscopic_widths,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ResultRecord,
    TruncationError,
    ValidationReport,
    config_from_mapping,
    config_hash,
    cross_validate,
    distribution,
    emit,
    emit_distribution,
    load_config,
    run,
    sweep,
    validate_config,
)
from .oscillator import (
    EigenState,
    OscillatorBasis,
    QuadratureError,
    Quadrature,
    basis_quadrature,
    eigenfunction,
    eigenfunction_matrix,
    free_phase_factors,
    gauss_legendre,
    level_energies,
    position_moments,
    position_wavefunction,
    project_gaussian,
)
from .pde import (
    BoundaryLeakError,
    GridWavefunction,
    Lattice,
    StepFilterUnsupportedError,
    apply_hamiltonian,
    crank_nicolson_evolve,
    effective_hamiltonian,
    run_stroboscopic,
    sample_gaussian,
)
from .stroboscopic import (
    AsymptoticResult,
    ChainRecord,
    ChainUnderflowError,
    StroboscopicPlan,
    UncertaintyCurve,
    apply_chain,
    asymptotic_uncertainty,
    nth_outcome_distribution,
    qnd_commutator,
    sweep_quiescent_time,
    uncertainty_evolution,
)
from .weights import (
    FILTER_KINDS,
    WeightMatrix,
    WeightSpec,
    evaluate_weight,
    measurement_coupling,
    weight_matrix,
)

__version__ = "0.1.0"
