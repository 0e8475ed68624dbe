"""Symbolic extraction of conserved quantities."""

from .candidate import SPURIOUS, TRUE_DISCOVERY, Candidate
from .expression import Node, evaluate, from_prefix, to_infix, to_prefix
from .gp import GpConfig, GpExpression, gp_symreg
from .lasso import (
    FeatureLibrary,
    Monomial,
    build_monomial_features,
    canonical_null_vector,
    explicit_pde_candidates,
    jacobi_eigh,
    lv_lasso,
    monomial_library,
    null_space_dimension,
    poly_lasso,
    smallest_eigvec,
)
from .sampling import PhiSamples, sample_phi_pairs

__all__ = [
    "Candidate",
    "FeatureLibrary",
    "GpConfig",
    "GpExpression",
    "Monomial",
    "Node",
    "PhiSamples",
    "SPURIOUS",
    "TRUE_DISCOVERY",
    "build_monomial_features",
    "canonical_null_vector",
    "evaluate",
    "explicit_pde_candidates",
    "from_prefix",
    "gp_symreg",
    "jacobi_eigh",
    "lv_lasso",
    "monomial_library",
    "null_space_dimension",
    "poly_lasso",
    "sample_phi_pairs",
    "smallest_eigvec",
    "to_infix",
    "to_prefix",
]
