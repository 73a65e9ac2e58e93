"""Newton's method on manifolds through parametrisation pairs.

A parametrisation pair (phi, psi) turns the classical Newton update into a
manifold iteration: pull the cost back through phi, take the Euclidean
Newton step in the tangent space, push the result through psi. The package
provides the linear-algebra kernel, manifold/point types, the built-in
parametrisation kinds with their sufficient-condition audit, cost models,
the iteration driver with pair selectors, and convergence-rate fitting.
The ``gnewton`` console script exposes run/audit/rates on top of it.
"""

from .costs import (AbsPower, BrockettTrace, GrassmannTrace, Quadratic,
                    ShiftedCubic, ambient_gradient, ambient_hessian_vec, value)
from .errors import (ChartDomainViolation, ConfigError, GnewtonError,
                     InsufficientData, ManifoldMismatch, NoConvergence,
                     NotTwiceDifferentiable, OutsideValidityRadius,
                     ProjectionUndefined, RankDeficient, SchemaError,
                     SingularHessian)
from .config import (Experiment, build_experiment, compute_truth, load_config,
                     match_truth_signs, near_truth_start)
from .linalg import polar_factor, symmetric_eigen, symmetric_solve
from .manifolds import (ManifoldDescriptor, Point, TangentBasis,
                        TangentVector, distance, euclidean, grassmann,
                        project_to_manifold, random_point, sphere, stiefel,
                        tangent_basis)
from .newton import (DampedNewton, Fixed, Identity, IterationTrace, Jet2,
                     Newton, PathDependent, Random, RoundRobin,
                     SphereStereographic, StepResult, chart_lift_step,
                     euclidean_newton_step, generalized_newton_step,
                     pullback_jet, run_iteration)
from .parametrizations import (AuditReport, Custom1D, ExampleBeta,
                               ParametrizationPair, Projection, QR, Recentred,
                               SphereGeodesic, apply_phi, apply_psi,
                               audit_conditions, kind_name, kind_valid_on,
                               pair_label, recentring_rotation,
                               second_order_term)
from .rates import (DEFAULT_CEIL, DEFAULT_FLOOR, RateEstimate, error_sequence,
                    estimate_rate)
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "AbsPower", "AuditReport", "BrockettTrace", "ChartDomainViolation",
    "ConfigError", "Custom1D", "DampedNewton", "DEFAULT_CEIL",
    "DEFAULT_FLOOR", "distance", "error_sequence", "estimate_rate",
    "euclidean", "euclidean_newton_step", "ExampleBeta", "Experiment",
    "Fixed", "generalized_newton_step", "GnewtonError", "grassmann",
    "GrassmannTrace", "Identity", "InsufficientData", "IterationTrace",
    "Jet2", "kind_name", "kind_valid_on", "load_config", "ManifoldDescriptor",
    "ManifoldMismatch", "match_truth_signs", "near_truth_start", "Newton",
    "NoConvergence", "NotTwiceDifferentiable", "OutsideValidityRadius",
    "pair_label", "ParametrizationPair", "PathDependent", "Point",
    "polar_factor", "project_to_manifold", "Projection",
    "ProjectionUndefined", "pullback_jet", "QR", "Quadratic", "Random",
    "random_point", "RankDeficient", "RateEstimate", "Recentred",
    "recentring_rotation", "RoundRobin", "run_iteration", "SchemaError",
    "second_order_term", "ShiftedCubic", "SingularHessian",
    "sphere", "SphereGeodesic", "SphereStereographic", "SplitMix64",
    "StepResult", "stiefel", "symmetric_eigen", "symmetric_solve",
    "TangentBasis", "TangentVector", "tangent_basis", "value",
    "apply_phi", "apply_psi", "audit_conditions", "build_experiment",
    "chart_lift_step", "compute_truth", "__version__",
]
