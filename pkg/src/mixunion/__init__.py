"""Finite-sample lower bounds for the probability of a union of dependent events.

The package pairs each bound with an exact or simulated reference so that
validity can be checked rather than assumed.
"""

from ._backend import BACKEND, available_backends
from .bounds import (
    SharpnessQuery,
    SharpnessVerdict,
    alpha_bound,
    alpha_lower_mass_bound,
    chung_erdos_bound,
    geom_phi_bound,
    geometric_spacing,
    local_overlap,
    phi_bound,
    phi_optimize,
    poly_alpha_bound,
    poly_alpha_bound_from,
    second_order_bound,
    sharpness_scan,
    window_bound,
)
from .core import (
    BoundReport,
    BoundsError,
    FamilyMismatchError,
    InsufficientBandError,
    InsufficientMassError,
    IntersectionBand,
    MarginalSequence,
    MissingPairsError,
    MixingProfile,
    WindowSpec,
    ZeroLowerMassError,
    band_from_function,
    cumulative_mass,
    mass_threshold,
    profile_at,
    spaced_classes,
    spaced_partition,
    window_spec,
)
from .models import (
    BlockFamily,
    JointTableModel,
    Markov2Model,
    PastTooLargeError,
    block_family_model,
    exact_restricted_coefficient,
    joint_table_union,
    markov2_model,
    markov_to_joint_table,
    nonoccurrence_probability,
    pairwise_intersections,
    product_table,
    random_joint_table,
    restricted_coefficients,
    restricted_profile,
)
from .montecarlo import McConfig, McEstimate, estimate_union, sample_markov2

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
