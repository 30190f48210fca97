"""Faces, support functions and boundaries of maximal monotone operator values,
estimated from nearby values and checked against exact polyhedral oracles."""
from .convex_sets import (EmptySetError, PolyhedralSet, SupportValue, face_of,
                          min_norm_point, normal_cone, set_distance, support_function,
                          tangent_cone)
from .estimators import MinimalNormSelection, ResolventMap, YosidaApproximation
from .limits import (LimitProbe, Tolerances, VerificationReport, boundary_estimate,
                     constructive_face_sequence, decompose, estimate_limsup_face,
                     lipschitz_bound, local_bound_check, minnorm_limsup_face,
                     support_via_minnorm, support_via_selection,
                     unique_determination_check)
from .operators import (AffineMonotone, DomainError, DualityMapOp, MaxAffineFunction,
                        NormalConeMap, SelectionPolicy, SubdiffMaxAffine, Sum,
                        UnitBallNormalCone, constant, min_norm_selection)
from .resolvent import (ResolventError, Schedule, min_norm_via_yosida, resolvent,
                        yosida_approximation, yosida_trajectory)
from .space import SpaceSpec

__version__ = "0.1.0"
