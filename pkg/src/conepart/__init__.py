"""Numerical solvers for equipartitioning a measure by a group-invariant fan
of cones under a rigid motion, and for inscribing an orientation-similar
crosspolytope in a smooth strictly convex body.

Works for ambient dimension d = p^k, an odd prime power, with the group
(Z_p)^k permuting a distinguished basis.
"""

from ._kernels import backend
from .equipartition import (Certificate, SolveOptions, SolveResult, certify,
                            objective, residual, solve)
from .errors import (CapacityError, CommonRayError, ConepartError, ConfigError,
                     DegenerateFanError, DomainError, InvalidFanError,
                     InvalidParameterError)
from .fan import (ConeOracle, Fan, ValidationReport, cone_index, cone_labels,
                  soft_membership, validate_fan, voronoi_fan)
from .group import (GroupTable, PermutationAction, act_on_vector, make_group,
                    multiply, regular_action)
from .inscription import (Ball, ConvexBody, Ellipsoid, InscriptionOptions,
                          InscriptionResult, LqBall, VerificationReport, gauge,
                          inscription_residual, ray_length, solve_inscription,
                          verify_inscription)
from .measure import (GaussianMixture, MassVector, Measure, PointCloud,
                      PointCloudFile, SupportBound, UniformBall, cone_masses,
                      load_point_cloud_csv, mc_oracle, sample, support_bound)
from .motion import (RigidMotion, RotationChart, apply, chart_eval, compose,
                     inverse_apply, random_rotation)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "Certificate", "SolveOptions", "SolveResult", "certify", "objective",
    "residual", "solve",
    "CapacityError", "CommonRayError", "ConepartError", "ConfigError",
    "DegenerateFanError", "DomainError", "InvalidFanError",
    "InvalidParameterError",
    "ConeOracle", "Fan", "ValidationReport", "cone_index", "cone_labels",
    "soft_membership", "validate_fan", "voronoi_fan",
    "GroupTable", "PermutationAction", "act_on_vector", "make_group",
    "multiply", "regular_action",
    "Ball", "ConvexBody", "Ellipsoid", "InscriptionOptions",
    "InscriptionResult", "LqBall", "VerificationReport", "gauge",
    "inscription_residual", "ray_length", "solve_inscription",
    "verify_inscription",
    "GaussianMixture", "MassVector", "Measure", "PointCloud",
    "PointCloudFile", "SupportBound", "UniformBall", "cone_masses",
    "load_point_cloud_csv", "mc_oracle", "sample", "support_bound",
    "RigidMotion", "RotationChart", "apply", "chart_eval", "compose",
    "inverse_apply", "random_rotation",
    "__version__",
]
