"""Balanced metrics on direct sums of line bundles over CP1 and CP1xCP1.

Computes balanced bases by a fixed-point iteration on the L2 Gram matrix of
the pulled-back Grassmannian metric, and builds exact Gieseker points with
the diagonal one-parameter subgroups that destabilize them when the
rank/section-count ratios of the summands differ.
"""
from .bundle import BundleSpec, SectionBasis, evaluate_sections, h0_basis, make_spec, parse_bundle, ratio_criterion
from .geometry import PolarizedBase, QuadratureRule, integrate, make_base, monomial_moment_oracle, quadrature_nodes
from .gieseker import (
    GiesekerPoint,
    OneParameterSubgroup,
    destabilizing_ops,
    gieseker_point,
    hm_weight_search,
    ops_weights,
)
from .metric import (
    BalanceOptions,
    BalanceResult,
    BasisTransform,
    Diagnosis,
    balance_defect,
    concat_balanced,
    find_balanced,
    gram_matrix,
    iteration_step,
    metric_samples,
    pointwise_projection,
)

__version__ = "0.1.0"
