"""Externally translated captions and translation test pairs."""
from pathlib import Path
from typing import List, Tuple

from ..utils.errors import DatasetError, DuplicateCaptionError, UnknownCaptionError
from ..utils.logging import get_logger
from .corpus import CaptionedCorpus, CaptionRecord, tokenize
from .io import read_jsonl

logger = get_logger("data.translations")


def translated_caption_id(source_caption_id: str, language: str) -> str:
    return f"{source_caption_id}#{language}"


def ingest_translations(corpus: CaptionedCorpus, translations_path: Path, language: str) -> CaptionedCorpus:
    """
    Add machine-translated captions to a corpus.

    Each row ``{"source_caption_id", "language", "text"}`` becomes a caption
    with provenance ``translated`` on the image of its source caption.

    Args:
        corpus: Corpus holding the source captions
        translations_path: JSON-lines translation file
        language: Language tag of the translations

    Returns:
        Corpus with the translated captions appended (unchanged for an empty file)

    Raises:
        UnknownCaptionError: a row names a caption absent from the corpus
        DuplicateCaptionError: a source caption is translated twice
        DatasetError: malformed row or language tag mismatch
    """
    rows = read_jsonl(translations_path)
    if not rows:
        logger.info(f"{translations_path}: no translations, corpus {corpus.name} unchanged")
        return corpus

    index = corpus.caption_index()
    seen = set()
    extra: List[CaptionRecord] = []
    for line_no, row in enumerate(rows, 1):
        try:
            source_id = str(row["source_caption_id"])
            text = str(row["text"])
        except KeyError as e:
            raise DatasetError(f"{translations_path}:{line_no}: missing field {e}") from e
        row_language = str(row.get("language", language))
        if row_language != language:
            raise DatasetError(
                f"{translations_path}:{line_no}: language {row_language!r} does not match {language!r}"
            )
        if source_id not in index:
            raise UnknownCaptionError(f"{translations_path}:{line_no}: unknown source caption {source_id}")
        if source_id in seen:
            raise DuplicateCaptionError(f"{translations_path}:{line_no}: {source_id} translated twice")
        seen.add(source_id)
        extra.append(CaptionRecord(
            caption_id=translated_caption_id(source_id, language),
            image_id=index[source_id].image_id,
            language=language,
            tokens=tuple(tokenize(text)),
            provenance="translated",
        ))

    logger.info(f"Ingested {len(extra)} {language} translations into {corpus.name}")
    return corpus.with_captions(extra)


def translation_pairs(
    corpus: CaptionedCorpus,
    language_1: str,
    language_2: str
) -> List[Tuple[CaptionRecord, CaptionRecord]]:
    """
    Aligned translation test pairs: the k-th ℓ1 caption of an image with its k-th ℓ2 caption.

    Images with fewer captions in one language contribute min(|ℓ1|, |ℓ2|) pairs.
    """
    first = corpus.captions_by_image(language_1)
    second = corpus.captions_by_image(language_2)
    pairs = []
    for image_id in corpus.image_ids:
        pairs.extend(zip(first.get(image_id, ()), second.get(image_id, ())))
    return pairs
