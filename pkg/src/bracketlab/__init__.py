"""Bracketing numbers, transition functions and empirical processes of torus automorphisms."""
from .brackets import (
    Bracket,
    BracketFamily,
    FamilyReport,
    build_ball_family,
    build_centered_ball_family,
    build_ellipsoid_family,
    build_extended_ellipsoid_family,
    build_monotone_family,
    build_rectangle_family,
    extension_tail_bracket,
    family_builder,
    family_count,
    locate_bracket,
    shift_kernel_class,
    verify_family,
)
from .distributions import DistributionHandle, gaussian_product, pseudo_inverse, uniform_cube
from .entropy import EntropyCurve, chaining_depth, entropy_curve, integral_condition, min_moment_order
from .errors import *  # noqa: F401,F403
from .geometry import (
    Ball,
    ClampEllipsoidIntersection,
    ClampEllipsoidUnion,
    Complement,
    Ellipsoid,
    Empty,
    Full,
    Rectangle,
    SublevelSet,
    TransitionFunction,
    dist_to_set,
    empirical_holder_norm,
    holder_bound,
    set_gap,
    transition,
    transition_eval,
)
from .stats import (
    anderson_darling,
    clt_check,
    covariance_decay,
    finite_dim_check,
    moment_growth,
    u_n,
    variance_estimate,
)
from .torus import CAT_MAP, IIDProcess, TorusAutomorphism, TorusProcess, classify, exact_orbit, orbit

__version__ = "0.1.0"
