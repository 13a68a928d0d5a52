"""Batch sampling over several corpora and tasks."""
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..utils.logging import get_logger
from .c2c import C2CPairSet
from .corpus import CaptionedCorpus, CaptionRecord

if TYPE_CHECKING:
    from ..model.vocabulary import Vocabulary

logger = get_logger("data.sampling")

IMAGE_CAPTION = "image-caption"
CAPTION_CAPTION = "caption-caption"
TASKS = (IMAGE_CAPTION, CAPTION_CAPTION)


@dataclass
class Batch:
    """One training batch; row i of each side is the gold partner of row i.

    Attributes:
        task: image-caption or caption-caption
        source: Name of the corpus the batch came from
        token_ids: Padded caption ids (n x T)
        lengths: Caption lengths
        caption_ids: Caption id per row
        image_ids: Gold image id per row
        images: Feature rows (image-caption task)
        token_ids_2: Second-language captions (caption-caption task)
        lengths_2: Lengths of the second-language captions
        caption_ids_2: Caption ids of the second side
    """
    task: str
    source: str
    token_ids: np.ndarray
    lengths: np.ndarray
    caption_ids: Tuple[str, ...]
    image_ids: Tuple[str, ...]
    images: Optional[np.ndarray] = None
    token_ids_2: Optional[np.ndarray] = None
    lengths_2: Optional[np.ndarray] = None
    caption_ids_2: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.caption_ids)


@dataclass
class DatasetSource:
    """A corpus registered for sampling.

    Attributes:
        corpus: Training corpus
        languages: Caption languages used for the image-caption task (None = all)
        c2c: Caption pairs; when non-empty the caption-caption task is enabled
        provenances: Caption provenances allowed for the image-caption task
    """
    corpus: CaptionedCorpus
    languages: Optional[Tuple[str, ...]] = None
    c2c: Optional[C2CPairSet] = None
    provenances: Tuple[str, ...] = ("original", "translated", "pseudopair")
    _captions: List[CaptionRecord] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        languages = set(self.languages) if self.languages is not None else None
        allowed = set(self.provenances)
        self._captions = [
            r for r in self.corpus.captions
            if (languages is None or r.language in languages) and r.provenance in allowed
        ]

    @property
    def name(self) -> str:
        return self.corpus.name

    @property
    def captions(self) -> List[CaptionRecord]:
        return self._captions

    @property
    def has_c2c(self) -> bool:
        return self.c2c is not None and len(self.c2c) > 0


class BatchSampler:
    """Draws batches: corpus uniformly, then task with p=0.5 when c2c is available.

    All randomness comes from the caller-owned generator.
    """

    def __init__(
        self,
        sources: Sequence[DatasetSource],
        batch_size: int,
        vocab: "Vocabulary",
        rng: np.random.Generator
    ):
        if not sources:
            raise ValueError("BatchSampler needs at least one dataset source")
        if batch_size < 2:
            raise ValueError(f"Contrastive batches need batch_size >= 2, got {batch_size}")
        for source in sources:
            if not source.captions:
                raise ValueError(f"Dataset source {source.name} has no usable captions")
        self.sources = list(sources)
        self.batch_size = batch_size
        self.vocab = vocab
        self.rng = rng
        self._warned: Set[Tuple[str, str]] = set()
        self._image_rows = [s.corpus.image_index() for s in self.sources]
        self._caption_lookup = [s.corpus.caption_index() for s in self.sources]

    def _draw(self, population: int, source: str, task: str) -> np.ndarray:
        if self.batch_size > population:
            if (source, task) not in self._warned:
                self._warned.add((source, task))
                logger.warning(
                    f"{source}/{task}: batch size {self.batch_size} exceeds {population} items, "
                    f"sampling with replacement"
                )
            return self.rng.choice(population, size=self.batch_size, replace=True)
        return self.rng.choice(population, size=self.batch_size, replace=False)

    def _encode(self, records: Sequence[CaptionRecord]) -> Tuple[np.ndarray, np.ndarray]:
        return self.vocab.encode_padded([r.tokens for r in records])

    def sample(self) -> Batch:
        k = int(self.rng.integers(len(self.sources)))
        source = self.sources[k]
        if source.has_c2c and self.rng.random() < 0.5:
            return self._caption_caption(k, source)
        return self._image_caption(k, source)

    def _image_caption(self, k: int, source: DatasetSource) -> Batch:
        picks = self._draw(len(source.captions), source.name, IMAGE_CAPTION)
        records = [source.captions[i] for i in picks]
        rows = [self._image_rows[k][r.image_id] for r in records]
        ids, lengths = self._encode(records)
        return Batch(
            task=IMAGE_CAPTION,
            source=source.name,
            token_ids=ids,
            lengths=lengths,
            caption_ids=tuple(r.caption_id for r in records),
            image_ids=tuple(r.image_id for r in records),
            images=source.corpus.features[rows],
        )

    def _caption_caption(self, k: int, source: DatasetSource) -> Batch:
        pairs = source.c2c.pairs
        picks = self._draw(len(pairs), source.name, CAPTION_CAPTION)
        lookup = self._caption_lookup[k]
        chosen = [pairs[i] for i in picks]
        first = [lookup[p.caption_id_1] for p in chosen]
        second = [lookup[p.caption_id_2] for p in chosen]
        ids, lengths = self._encode(first)
        ids_2, lengths_2 = self._encode(second)
        return Batch(
            task=CAPTION_CAPTION,
            source=source.name,
            token_ids=ids,
            lengths=lengths,
            caption_ids=tuple(r.caption_id for r in first),
            image_ids=tuple(p.image_id for p in chosen),
            token_ids_2=ids_2,
            lengths_2=lengths_2,
            caption_ids_2=tuple(r.caption_id for r in second),
        )


def sample_batch(
    sources: Sequence[DatasetSource],
    batch_size: int,
    rng: np.random.Generator,
    vocab: "Vocabulary"
) -> Batch:
    """Draw a single batch (see ``BatchSampler`` for repeated draws)."""
    return BatchSampler(sources, batch_size, vocab, rng).sample()
