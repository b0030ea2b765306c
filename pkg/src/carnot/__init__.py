"""Computable calculus on stratified (Carnot) groups.

Group arithmetic from structure constants (BCH product, dilations,
homogeneous norms), graded polynomial calculus with left-invariant vector
fields, and numerical first/second-order analysis of h-convex functions:
subdifferential hulls, mean-value witnesses, directional derivatives,
second-order expansion fits and the extended differential of the horizontal
gradient.
"""

from .convexity import (
    MvtWitness,
    ScalarField,
    closed_graph_diagnostic,
    dermax_check,
    directional_derivative,
    first_order_characterization,
    first_order_residual_ladder,
    hconvexity_check,
    horizontal_fd_gradient,
    lambda_subdiff_membership,
    mean_value_witness,
    reachable_gradient_sample,
    subdiff_membership,
    subdifferential_hull,
)
from .errors import (
    BracketingError,
    CarnotError,
    DescriptorError,
    DomainError,
    NonConvexSliceError,
    NonSingletonSubdifferential,
    RankDeficientDesign,
    SamplingError,
)
from .fields import FieldCoefficients, apply_field, field_coefficients
from .groups import (
    GroupDescriptor,
    ValidationReport,
    bch_product,
    dilate,
    homogeneous_norm,
    inverse,
    project_layer,
    validate_descriptor,
)
from .hull import ConvexPolytope, hausdorff_distance
from .jets import (
    Jet2,
    check_alij,
    jet_coefficients,
    lambda_max,
    left_translate_poly,
    poly_from_jet2,
    sym_hessian,
)
from .polynomials import ZERO_DEGREE, GradedPolynomial, monomials_up_to, weighted_degree
from .registry import (
    build_function,
    build_group,
    engel,
    euclidean,
    free_step2,
    function_from_spec,
    heisenberg,
    load_descriptor,
    load_function,
)
from .sampling import SamplingPlan, Tolerances, default_plan
from .second_order import (
    ExpansionFit,
    ExtendedDiffFit,
    SecondOrderReport,
    build_quotient_grid,
    characterize_second_order,
    fit_expansion,
    fit_extended_differential,
    psd_check,
    second_quotient,
    subdiff_quotient,
)

__version__ = "0.1.0"
