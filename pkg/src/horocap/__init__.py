"""Numerical laboratory for capillary hypersurfaces on a horospherical support."""

from .halfspace import (AmbientField, FieldTag, GeometryError, HPoint, HVector,
                        PotentialV, ambient_field, covariant_derivative,
                        horosphere_normal, lie_metric_residual, metric,
                        orthonormal_frame, v_hessian_residual)
from .quadrature import QuadratureSpec, gauss_legendre, unit_sphere_area
from .surfaces import (BoundaryFrame, EvaluationError, GridSurface,
                       ImmersionError, ParamSurface, ProfileSurface, ShapeData,
                       SupportError, SurfaceFields, check_immersion, fields_at,
                       integrate_M, integrate_dM)
from .families import (AmplitudeError, CapKind, CapSpec, ConstructionError,
                       FREE, InfeasibleError, PerturbationSpec, build, perturb,
                       solve_for_angle)
from .identities import IDENTITY_IDS, AngleError, IdentityReport, suite, verify
from .stability import (RobinData, ScalarField, SpectrumResult, VariationCheck,
                        boundary_cancellation, constrained_spectrum,
                        energy_second_difference, fd_variation_check,
                        jacobi_apply, laplace_beltrami, phi_aux, phi_test,
                        quadratic_form, robin_q, umbilicity_deficit)
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"
