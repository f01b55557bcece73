"""decaylab: a desk-scale numerical laboratory for commutator-based decay estimates.

Builds finite-difference Schrodinger operators H = -d2/dx2 + V together with
the dilation generator A, splits [H, iA] = cH + K at matrix level, constructs
the modified conjugate operator (weighted A plus a time-integrated drift),
verifies the resulting commutator identities as exact finite-dimensional
algebra, and measures window-limited pointwise decay rates of the
autocorrelation <u, exp(itH) u>.
"""

from .grids import Grid, make_grid
from .operators import (
    HermitianOperator,
    SpectralData,
    hermitian,
    spectral_decompose,
    matrix_function,
    apply_function,
    band_projection_matrix,
    project_band,
    energy_weight,
    energy_weight_values,
    assemble_hamiltonian,
    assemble_dilation,
)
from .potentials import PotentialSpec, PotentialAudit, audit_potential
from .commutators import (
    CommutatorDecomposition,
    AssumptionAudit,
    commutator,
    split_commutator,
    continuum_remainder,
    remainder_fidelity,
    kato_factors,
    audit_assumptions,
)
from .propagation import (
    PropagationPlan,
    EvolveResult,
    SpectralBoundsError,
    make_plan,
    propagate,
    evolve_trace,
    reflection_window,
    quantile_radius,
)
from .conjugate import (
    DriftBuildTrace,
    ConjugateOperator,
    oscillatory_filter,
    integrate_drift,
    build_conjugate,
    choose_truncation_time,
    verify_generator_identity,
    verify_group_commutator,
    verify_drift_commutator_bound,
)
from .smoothness import (
    SmoothnessReport,
    EnergyMembership,
    smoothing_integral,
    kato_constant,
    morawetz_check,
    energy_membership,
    band_limited_samples,
)
from .decay import (
    DecayTrace,
    DecayReport,
    autocorrelation_trace,
    envelope_points,
    fit_exponent,
    envelope_bound_constant,
    verify_proposition,
    gaussian_state,
    oracle_gaussian_state,
    radial_bump_state,
    band_gaussian_state,
)
from .config import ExperimentConfig, ConfigError, load_config, validate_config, config_hash
from .runner import run_experiment
from .scenarios import bundled_scenarios, scenario_config, list_scenarios
from .reporting import RunReport, compare_runs, dump_operator, load_operator, load_report

__version__ = "0.1.0"
