"""Nonlinear fixed-point collapse dynamics for weakly measured quantum systems."""

from .collapse import (
    collapse_rhs,
    convergence_exponent,
    fixed_point,
    fixed_point_residual,
    geodesic_map_density,
    geodesic_map_pure,
    integrate_trajectory,
    pure_state_rhs,
)
from .ensemble import (
    EnsembleStatistics,
    WeightStrategy,
    compute_weights,
    diagonal_coordinates,
    diagonal_rhs,
    ensemble_rhs,
    integrate_diagonal,
    integrate_ensemble,
    offdiagonal_closed_form,
    run_ensemble,
)
from .errors import DimensionError, InvariantBreach, QuantumStateError, ZeroProbabilityError
from .integrate import IntegratorParams, TrajectoryRecord
from .lindblad import check_collapse_identities, dissipator, integrate_master, master_rhs
from .quantum import (
    ProjectorSet,
    Tolerances,
    born_probabilities,
    kraus_apply,
    partial_trace,
    projective_collapse,
    validate_density,
)

__version__ = "0.1.0"
