"""Pseudopair generation: annotate target-language captions with their nearest source caption."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..data.corpus import PROVENANCES, CaptionedCorpus, CaptionRecord
from ..data.synthetic import SynthSpec, build_lexicon, concept_latents
from ..utils.config import config
from ..utils.errors import DatasetError, PseudoPairError
from ..utils.logging import get_logger

logger = get_logger("pseudopairs.generate")


class CaptionEncoder(Protocol):
    """Anything that maps caption records to unit-norm sentence vectors."""

    def encode_captions(self, records: Sequence[CaptionRecord]) -> np.ndarray:
        ...


class ConceptOracleEncoder:
    """Encodes a caption as the unit-normalized latent of the concept its words name.

    Only usable on synthetic corpora, where the lexicon is known.
    """

    def __init__(self, latents: np.ndarray, concept_of_word: Dict[str, int]):
        norms = np.linalg.norm(latents, axis=1, keepdims=True)
        self.latents = (latents / np.where(norms == 0, 1, norms)).astype(np.float64)
        self.concept_of_word = concept_of_word

    @classmethod
    def from_spec(cls, spec: SynthSpec) -> "ConceptOracleEncoder":
        return cls(concept_latents(spec), build_lexicon(spec).concept_of_word())

    def concept_of(self, record: CaptionRecord) -> int:
        for token in record.tokens:
            if token in self.concept_of_word:
                return self.concept_of_word[token]
        raise DatasetError(f"Caption {record.caption_id} names no known concept")

    def encode_captions(self, records: Sequence[CaptionRecord]) -> np.ndarray:
        if not records:
            return np.zeros((0, self.latents.shape[1]))
        return self.latents[[self.concept_of(r) for r in records]]


@dataclass(frozen=True)
class PseudoPair:
    """A target caption annotated with its most similar source caption."""
    target_caption_id: str
    source_caption_id: str
    target_image_id: str
    similarity: float

    def to_dict(self) -> dict:
        return {
            "target_caption_id": self.target_caption_id,
            "source_caption_id": self.source_caption_id,
            "target_image_id": self.target_image_id,
            "similarity": self.similarity,
        }


@dataclass(frozen=True)
class PseudoPairSet:
    """Pseudopairs in target-caption order plus filtering metadata.

    Attributes:
        pairs: One pair per (kept) target caption
        source_language: Language of the transferred captions
        target_language: Language of the annotated corpus
        policy: Filter applied (none, keep-top-25, remove-bottom-25)
        threshold: Similarity threshold of the filter, if any
        generated: Pair count before filtering
        source_provenances: Provenances the source candidates were drawn from
    """
    pairs: Tuple[PseudoPair, ...]
    source_language: str = ""
    target_language: str = ""
    policy: str = "none"
    threshold: Optional[float] = None
    generated: int = field(default=-1)
    source_provenances: Tuple[str, ...] = PROVENANCES

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.generated < 0:
            object.__setattr__(self, "generated", len(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def similarities(self) -> np.ndarray:
        return np.array([p.similarity for p in self.pairs], dtype=np.float64)


def _nearest_sources(target_vectors: np.ndarray, source_vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scores = target_vectors @ source_vectors.T
    best = np.argmax(scores, axis=1)
    return best, scores[np.arange(scores.shape[0]), best]


def generate_pseudopairs(
    encoder: CaptionEncoder,
    source_corpus: CaptionedCorpus,
    target_corpus: CaptionedCorpus,
    source_language: str,
    target_language: str,
    threads: Optional[int] = None,
    shard_size: int = 512,
    source_provenances: Optional[Sequence[str]] = None
) -> PseudoPairSet:
    """
    Pair every target caption with its most similar source caption.

    The argmax runs over every source-language caption of ``source_corpus``,
    translated and transferred ones included unless ``source_provenances``
    narrows the candidates; ties go to the lowest caption id. Target shards
    may be scored on several threads and are merged back in target-caption
    order.

    Args:
        encoder: Sentence encoder (trained model or oracle)
        source_corpus: Corpus providing the transferred captions (ℓ1)
        target_corpus: Corpus whose captions get annotated (ℓ2)
        source_language: ℓ1
        target_language: ℓ2, must differ from ℓ1
        threads: Worker threads (default from config)
        shard_size: Target captions per shard
        source_provenances: Provenances eligible as sources (default all)

    Returns:
        Exactly one pseudopair per target caption

    Raises:
        PseudoPairError: same language on both sides, unknown provenance, or no
            source/target captions
    """
    if source_language == target_language:
        raise PseudoPairError(f"Pseudopairs need two languages, got {source_language!r} twice")
    provenances = tuple(source_provenances) if source_provenances is not None else PROVENANCES
    unknown = set(provenances) - set(PROVENANCES)
    if unknown or not provenances:
        raise PseudoPairError(f"Invalid source provenances {list(provenances)}")
    sources = sorted(source_corpus.captions_in(source_language, provenances=provenances),
                     key=lambda r: r.caption_id)
    if not sources:
        raise PseudoPairError(f"{source_corpus.name} has no {source_language} captions to transfer")
    targets = target_corpus.captions_in(target_language, provenances=("original",))
    if not targets:
        raise PseudoPairError(f"{target_corpus.name} has no {target_language} captions to annotate")

    source_vectors = encoder.encode_captions(sources)
    shards = [targets[s:s + shard_size] for s in range(0, len(targets), shard_size)]

    def score(shard: List[CaptionRecord]) -> Tuple[np.ndarray, np.ndarray]:
        return _nearest_sources(encoder.encode_captions(shard), source_vectors)

    threads = threads or config.eval_threads
    if threads > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score, shards))
    else:
        results = [score(shard) for shard in shards]

    pairs = []
    for shard, (best, similarity) in zip(shards, results):
        for record, j, s in zip(shard, best, similarity):
            pairs.append(PseudoPair(
                target_caption_id=record.caption_id,
                source_caption_id=sources[int(j)].caption_id,
                target_image_id=record.image_id,
                similarity=float(np.clip(s, -1.0, 1.0)),
            ))
    logger.info(
        f"Generated {len(pairs)} pseudopairs: {len(targets)} {target_language} captions of "
        f"{target_corpus.name} annotated from {len(sources)} {source_language} captions of {source_corpus.name}"
    )
    return PseudoPairSet(tuple(pairs), source_language, target_language, source_provenances=provenances)


def pairs_to_corpus(
    pairs: PseudoPairSet,
    source_corpus: CaptionedCorpus,
    target_corpus: CaptionedCorpus,
    name: Optional[str] = None
) -> CaptionedCorpus:
    """
    Target corpus augmented with the transferred captions.

    Each transferred caption keeps the source caption's tokens and language,
    moves to the target image and gets the id ``<source id>@<target id>``
    with provenance ``pseudopair``.

    Raises:
        PseudoPairError: no pairs
        DatasetError: a pair names an unknown source caption
    """
    if not len(pairs):
        raise PseudoPairError("No pseudopairs to add")
    index = source_corpus.caption_index()
    extra = []
    for pair in pairs:
        source = index.get(pair.source_caption_id)
        if source is None:
            raise DatasetError(f"Pseudopair names unknown source caption {pair.source_caption_id}")
        extra.append(CaptionRecord(
            caption_id=f"{pair.source_caption_id}@{pair.target_caption_id}",
            image_id=pair.target_image_id,
            language=source.language,
            tokens=source.tokens,
            provenance="pseudopair",
        ))
    return target_corpus.with_captions(extra, name=name or f"{target_corpus.name}+pseudo")
