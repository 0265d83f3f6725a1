"""Convex analysis in pseudo-Euclidean spaces.

Fitzpatrick functions and projections of finite S-monotone sets, detection of
projection singularities, and explicit c-c surfaces covering them.
"""
from .covering import (CcSurface, CoverReport, IsotropicHyperplane, cover_sigma0, cover_sigma0_lines,
                       cover_sigma1, cover_sigma_j_A, eval_surface, mean_value_witness, rescale_theta,
                       surface_gradient_check, theorem1_build, verify_coverage)
from .errors import DegenerateFormError, InputError, LipschitzError, MonotonicityError
from .monotone import (MonotoneSet, ProjectionResult, check_monotone, fitzpatrick, graph_from_lipschitz,
                       project, random_isotropic_chain, random_monotone, scalar_square_to_set)
from .polyconvex import (ActiveSet, PolyConvexFn, arg_set, conjugate_at, evaluate, exposed_slopes,
                         fenchel_check, hull_membership, restricted, subdifferential, tightened)
from .pseudo_space import InertiaDecomposition, ScalarProduct, inertia, pair_class, sproduct
from .singularity import SingularPoint, Witness, candidate_singular_points, classify_point, sigma_j_A

__version__ = "0.1.0"
