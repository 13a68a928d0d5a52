"""Pseudopair generation, filtering and diagnostics."""

from .generate import (
    CaptionEncoder,
    ConceptOracleEncoder,
    PseudoPair,
    PseudoPairSet,
    generate_pseudopairs,
    pairs_to_corpus,
)
from .filters import FILTER_POLICIES, apply_filter, nearest_rank_threshold
from .diagnostics import (
    PseudoPairDiagnostics,
    agreement_rate,
    concept_agreement,
    diagnose,
    jaccard,
    top_k_mass,
    usage_histogram,
)
from .io import read_diagnostics, read_pairs, write_diagnostics, write_pairs

__all__ = [
    'CaptionEncoder',
    'ConceptOracleEncoder',
    'PseudoPair',
    'PseudoPairSet',
    'generate_pseudopairs',
    'pairs_to_corpus',
    'FILTER_POLICIES',
    'apply_filter',
    'nearest_rank_threshold',
    'PseudoPairDiagnostics',
    'agreement_rate',
    'concept_agreement',
    'diagnose',
    'jaccard',
    'top_k_mass',
    'usage_histogram',
    'read_diagnostics',
    'read_pairs',
    'write_diagnostics',
    'write_pairs',
]
