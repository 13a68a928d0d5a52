"""Captioned corpora: images (feature rows) plus language-tagged captions."""
import string
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import (
    DanglingImageError,
    DatasetError,
    DimensionMismatchError,
    DuplicateCaptionError,
    DuplicateImageError,
)

Provenance = Literal["original", "translated", "pseudopair"]
Split = Literal["train", "val", "test"]

PROVENANCES: Tuple[str, ...] = ("original", "translated", "pseudopair")

_PUNCTUATION = string.punctuation + "“”„‚‘’«»…–—"


def tokenize(text: str) -> List[str]:
    """Lowercase, split on whitespace, strip leading/trailing punctuation.

    Tokens that are pure punctuation disappear.
    """
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_PUNCTUATION)
        if token:
            tokens.append(token)
    return tokens


@dataclass(frozen=True)
class CaptionRecord:
    """One caption of one image.

    Attributes:
        caption_id: Unique caption id within a corpus
        image_id: Image the caption describes
        language: Language tag, e.g. "en" or "de"
        tokens: Tokenized text (non-empty)
        provenance: original, translated or pseudopair
    """
    caption_id: str
    image_id: str
    language: str
    tokens: Tuple[str, ...]
    provenance: str = "original"

    def __post_init__(self):
        if not self.tokens:
            raise DatasetError(f"Caption {self.caption_id} has no tokens")
        if self.provenance not in PROVENANCES:
            raise DatasetError(f"Caption {self.caption_id}: unknown provenance {self.provenance!r}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True, eq=False)
class CaptionedCorpus:
    """Images with precomputed features and their captions.

    Corpora are immutable; derived corpora are built with ``with_captions``,
    ``restrict_languages`` and friends.

    Attributes:
        name: Corpus name (also names the sampling source)
        image_ids: Image ids; row i of ``features`` belongs to image_ids[i]
        features: Feature matrix, one row per image
        captions: Caption records
        split: train, val or test
        concepts: Optional ground-truth concept per image (synthetic corpora)
    """
    name: str
    image_ids: Tuple[str, ...]
    features: np.ndarray
    captions: Tuple[CaptionRecord, ...]
    split: str = "train"
    concepts: Optional[Dict[str, int]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        object.__setattr__(self, "captions", tuple(self.captions))
        self.validate()

    def validate(self) -> None:
        """Check the cross-reference invariants.

        Raises:
            DimensionMismatchError: feature rows do not match the image count
            DuplicateImageError: repeated image ids
            DuplicateCaptionError: repeated caption ids
            DanglingImageError: a caption names an unknown image
        """
        if self.features.ndim != 2 or self.features.shape[0] != len(self.image_ids):
            raise DimensionMismatchError(
                f"{self.name}: {len(self.image_ids)} images but features of shape {self.features.shape}"
            )
        if len(set(self.image_ids)) != len(self.image_ids):
            raise DuplicateImageError(f"{self.name}: duplicate image ids")
        known = set(self.image_ids)
        seen = set()
        for record in self.captions:
            if record.image_id not in known:
                raise DanglingImageError(record.image_id, record.caption_id)
            if record.caption_id in seen:
                raise DuplicateCaptionError(f"{self.name}: duplicate caption id {record.caption_id}")
            seen.add(record.caption_id)

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def languages(self) -> List[str]:
        """Languages present, in first-appearance order."""
        return list(OrderedDict.fromkeys(r.language for r in self.captions))

    def image_index(self) -> Dict[str, int]:
        return {image_id: i for i, image_id in enumerate(self.image_ids)}

    def caption_index(self) -> Dict[str, CaptionRecord]:
        return {r.caption_id: r for r in self.captions}

    def captions_in(self, language: str, provenances: Optional[Iterable[str]] = None) -> List[CaptionRecord]:
        allowed = set(provenances) if provenances is not None else None
        return [
            r for r in self.captions
            if r.language == language and (allowed is None or r.provenance in allowed)
        ]

    def captions_by_image(self, language: Optional[str] = None) -> Dict[str, List[CaptionRecord]]:
        """Captions grouped per image, in image order (images without captions omitted)."""
        grouped: Dict[str, List[CaptionRecord]] = {image_id: [] for image_id in self.image_ids}
        for record in self.captions:
            if language is None or record.language == language:
                grouped[record.image_id].append(record)
        return {k: v for k, v in grouped.items() if v}

    def concept_of_caption(self, record: CaptionRecord) -> Optional[int]:
        if self.concepts is None:
            return None
        return self.concepts.get(record.image_id)

    def with_captions(self, extra: Sequence[CaptionRecord], name: Optional[str] = None) -> "CaptionedCorpus":
        """New corpus with additional caption records."""
        return replace(self, name=name or self.name, captions=self.captions + tuple(extra))

    def restrict_languages(self, languages: Iterable[str], name: Optional[str] = None) -> "CaptionedCorpus":
        """New corpus keeping only captions in ``languages`` (all images kept)."""
        keep = set(languages)
        return replace(self, name=name or self.name,
                       captions=tuple(r for r in self.captions if r.language in keep))

    def subset_images(self, image_ids: Sequence[str], name: str, split: str) -> "CaptionedCorpus":
        """New corpus restricted to ``image_ids`` (in the given order)."""
        index = self.image_index()
        rows = [index[i] for i in image_ids]
        wanted = set(image_ids)
        concepts = None
        if self.concepts is not None:
            concepts = {i: self.concepts[i] for i in image_ids if i in self.concepts}
        return CaptionedCorpus(
            name=name,
            image_ids=tuple(image_ids),
            features=self.features[rows],
            captions=tuple(r for r in self.captions if r.image_id in wanted),
            split=split,
            concepts=concepts,
        )


def split_corpus(
    corpus: CaptionedCorpus,
    val_images: int,
    test_images: int,
    seed: int
) -> Tuple[CaptionedCorpus, CaptionedCorpus, CaptionedCorpus]:
    """
    Split a corpus by image into train/val/test.

    Args:
        corpus: Corpus to split
        val_images: Number of validation images
        test_images: Number of test images
        seed: Seed of the permutation

    Returns:
        (train, val, test) corpora with disjoint images
    """
    n = len(corpus.image_ids)
    if val_images < 0 or test_images < 0 or val_images + test_images >= n:
        raise DatasetError(
            f"{corpus.name}: cannot take {val_images} val + {test_images} test images out of {n}"
        )
    order = np.random.default_rng(seed).permutation(n)
    ids = [corpus.image_ids[i] for i in order]
    test_ids = sorted(ids[:test_images])
    val_ids = sorted(ids[test_images:test_images + val_images])
    train_ids = sorted(ids[test_images + val_images:])
    return (
        corpus.subset_images(train_ids, f"{corpus.name}-train", "train"),
        corpus.subset_images(val_ids, f"{corpus.name}-val", "val"),
        corpus.subset_images(test_ids, f"{corpus.name}-test", "test"),
    )
