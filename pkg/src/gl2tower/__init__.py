"""Group-theoretic and numeric machinery for 2-adic Galois image computations."""

__version__ = "0.1.0"

from .residue import gl2_order, mat_inv, mat_mul, projective_line
from .subgroup import (
    OpenSubgroup,
    adjoin_minus_identity,
    close,
    from_generators_mod,
    full_group,
    predicates,
    transpose,
)
from .conjugacy import (
    conjugacy_classes,
    count_ambient_conjugates,
    is_conjugate,
    is_conjugate_into,
)

__all__ = [
    "OpenSubgroup",
    "adjoin_minus_identity",
    "close",
    "conjugacy_classes",
    "count_ambient_conjugates",
    "from_generators_mod",
    "full_group",
    "gl2_order",
    "is_conjugate",
    "is_conjugate_into",
    "mat_inv",
    "mat_mul",
    "predicates",
    "projective_line",
    "transpose",
]
