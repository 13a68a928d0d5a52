"""Caption–caption pairs: all cross-lingual caption pairs sharing an image."""
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

from ..utils.logging import get_logger
from .corpus import CaptionedCorpus

logger = get_logger("data.c2c")


@dataclass(frozen=True)
class C2CPair:
    caption_id_1: str
    caption_id_2: str
    image_id: str


@dataclass(frozen=True)
class C2CPairSet:
    """Pairs (caption in language_1, caption in language_2, shared image)."""
    language_1: str
    language_2: str
    pairs: Tuple[C2CPair, ...]

    def __len__(self) -> int:
        return len(self.pairs)


def build_c2c_pairs(
    corpus: CaptionedCorpus,
    language_1: str,
    language_2: str,
    provenances: Optional[Iterable[str]] = None
) -> C2CPairSet:
    """
    Full cross product of ℓ1 × ℓ2 captions per image.

    Five captions per language on one image give 25 pairs. A corpus lacking
    either language yields an empty set.

    Args:
        corpus: Source corpus
        language_1: First language tag
        language_2: Second language tag (must differ)
        provenances: Optional whitelist of caption provenances

    Returns:
        Pair set in image order, then ℓ1 caption order, then ℓ2 caption order
    """
    if language_1 == language_2:
        raise ValueError(f"c2c pairs need two different languages, got {language_1!r} twice")
    allowed = set(provenances) if provenances is not None else None
    first = corpus.captions_by_image(language_1)
    second = corpus.captions_by_image(language_2)
    pairs = []
    for image_id in corpus.image_ids:
        for a in first.get(image_id, ()):
            if allowed is not None and a.provenance not in allowed:
                continue
            for b in second.get(image_id, ()):
                if allowed is not None and b.provenance not in allowed:
                    continue
                pairs.append(C2CPair(a.caption_id, b.caption_id, image_id))
    logger.info(f"{corpus.name}: {len(pairs)} {language_1}-{language_2} caption pairs")
    return C2CPairSet(language_1, language_2, tuple(pairs))
