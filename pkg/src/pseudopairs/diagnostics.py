"""Coverage, hub and stability statistics of a pseudopair set."""
from collections import Counter, defaultdict
from typing import Dict, List, Optional, Set, Tuple

from pydantic import BaseModel

from ..data.corpus import CaptionedCorpus
from .generate import PseudoPairSet

DEFAULT_TOP_K = 150


class PseudoPairDiagnostics(BaseModel):
    """Summary statistics of which source captions were transferred.

    Attributes:
        pairs: Number of pairs
        source_captions: Candidate source captions
        distinct_sources: Source captions used at least once
        coverage: distinct_sources / source_captions
        usage_histogram: (source caption id, uses), most used first
        top_k: k of ``top_k_mass``
        top_k_mass: Fraction of pairs using the k most used source captions
        jaccard: Overlap of distinct source captions with a reference set
        agreement_rate: Fraction of shared target images with the same source captions
        concept_agreement: Fraction of pairs whose source and target share a concept
    """
    pairs: int
    source_captions: int
    distinct_sources: int
    coverage: float
    usage_histogram: List[Tuple[str, int]]
    top_k: int = DEFAULT_TOP_K
    top_k_mass: float = 0.0
    jaccard: Optional[float] = None
    agreement_rate: Optional[float] = None
    concept_agreement: Optional[float] = None


def usage_histogram(pairs: PseudoPairSet) -> List[Tuple[str, int]]:
    """Uses per source caption, most used first, ties by caption id."""
    counts = Counter(p.source_caption_id for p in pairs)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def top_k_mass(pairs: PseudoPairSet, k: int = DEFAULT_TOP_K) -> float:
    if not len(pairs):
        return 0.0
    histogram = usage_histogram(pairs)
    return sum(count for _, count in histogram[:k]) / len(pairs)


def source_ids(pairs: PseudoPairSet) -> Set[str]:
    return {p.source_caption_id for p in pairs}


def jaccard(pairs: PseudoPairSet, reference: PseudoPairSet) -> float:
    """Jaccard index of the distinct source-caption sets (1.0 when both are empty)."""
    a, b = source_ids(pairs), source_ids(reference)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def _sources_per_image(pairs: PseudoPairSet) -> Dict[str, Set[str]]:
    grouped: Dict[str, Set[str]] = defaultdict(set)
    for p in pairs:
        grouped[p.target_image_id].add(p.source_caption_id)
    return grouped


def agreement_rate(pairs: PseudoPairSet, reference: PseudoPairSet) -> Optional[float]:
    """
    Fraction of target images present in both sets whose transferred
    source-caption sets are identical; None without shared images.
    """
    mine, theirs = _sources_per_image(pairs), _sources_per_image(reference)
    shared = sorted(set(mine) & set(theirs))
    if not shared:
        return None
    return sum(mine[i] == theirs[i] for i in shared) / len(shared)


def concept_agreement(
    pairs: PseudoPairSet,
    source_corpus: CaptionedCorpus,
    target_corpus: CaptionedCorpus
) -> Optional[float]:
    """Fraction of pairs whose source caption's image and target image share a ground-truth concept."""
    if source_corpus.concepts is None or target_corpus.concepts is None or not len(pairs):
        return None
    index = source_corpus.caption_index()
    matches = 0
    for p in pairs:
        source_concept = source_corpus.concepts.get(index[p.source_caption_id].image_id)
        matches += source_concept is not None and source_concept == target_corpus.concepts.get(p.target_image_id)
    return matches / len(pairs)


def diagnose(
    pairs: PseudoPairSet,
    source_corpus: CaptionedCorpus,
    target_corpus: Optional[CaptionedCorpus] = None,
    reference: Optional[PseudoPairSet] = None,
    k: int = DEFAULT_TOP_K
) -> PseudoPairDiagnostics:
    """
    Diagnostics of a pseudopair set.

    Args:
        pairs: Pairs to analyse
        source_corpus: Corpus the source captions came from
        target_corpus: Annotated corpus (enables concept agreement on synthetic data)
        reference: Pairs from another run (enables Jaccard and agreement rate)
        k: Hub size for ``top_k_mass``
    """
    language = pairs.source_language
    candidates = len(source_corpus.captions_in(language, provenances=pairs.source_provenances)) if language \
        else len(source_corpus.captions)
    distinct = len(source_ids(pairs))
    return PseudoPairDiagnostics(
        pairs=len(pairs),
        source_captions=candidates,
        distinct_sources=distinct,
        coverage=distinct / candidates if candidates else 0.0,
        usage_histogram=usage_histogram(pairs),
        top_k=k,
        top_k_mass=top_k_mass(pairs, k),
        jaccard=jaccard(pairs, reference) if reference is not None else None,
        agreement_rate=agreement_rate(pairs, reference) if reference is not None else None,
        concept_agreement=concept_agreement(pairs, source_corpus, target_corpus) if target_corpus else None,
    )
