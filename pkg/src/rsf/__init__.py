"""Ricci flow of Sp(n+1)-invariant metrics on the spheres S^{4n+3}."""

from .errors import (ClassificationTimeout, DomainError, InconsistentTrajectoryError,
                     IntegrationError, ProfileWindowError, QuadratureError, RSFError,
                     PreconditionError, SameSideError, StepUnderflowError)
from .geometry import (CanonicalForm, MetricParams, ModelParams, RicciEigenvalues,
                       TangentVector, canonicalize, l2_pairing, normalize_volume,
                       relative_volume, ricci_eigenvalues, ricci_norm_sq,
                       scalar_curvature, scalar_curvature_slice, sectional_fiber_base,
                       slice_metric, traceless_ricci_norm_sq)
from .trajectory import (Direction, FlowKind, TerminalBehavior, TerminalKind, Trajectory)
from .flow import (FixedPointInfo, FixedPointName, Linearization, fixed_points,
                   jensen_slice_value, linearization, normalized_field,
                   reparametrize_to_normalized, slice_field, unnormalized_field)
from .integrator import IntegratorConfig, detect_terminal, integrate, monitor_series

__version__ = "0.1.0"

__all__ = [
    "RSFError", "DomainError", "StepUnderflowError", "QuadratureError", "IntegrationError",
    "InconsistentTrajectoryError", "PreconditionError", "SameSideError", "ClassificationTimeout", "ProfileWindowError",
    "ModelParams", "MetricParams", "RicciEigenvalues", "TangentVector", "CanonicalForm",
    "ricci_eigenvalues", "scalar_curvature", "scalar_curvature_slice", "ricci_norm_sq",
    "traceless_ricci_norm_sq", "relative_volume", "normalize_volume", "canonicalize",
    "sectional_fiber_base", "l2_pairing", "slice_metric",
    "FlowKind", "Direction", "TerminalKind", "TerminalBehavior", "Trajectory",
    "FixedPointName", "FixedPointInfo", "Linearization", "unnormalized_field",
    "normalized_field", "slice_field", "fixed_points", "jensen_slice_value", "linearization",
    "reparametrize_to_normalized",
    "IntegratorConfig", "integrate", "detect_terminal", "monitor_series",
]
