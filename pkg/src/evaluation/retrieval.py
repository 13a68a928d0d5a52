"""Image↔text and translation retrieval over a model snapshot."""
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from ..data.corpus import CaptionedCorpus, CaptionRecord
from ..data.translations import translation_pairs
from ..utils.config import config
from ..utils.errors import DatasetError, ShapeError
from ..utils.logging import get_logger
from .ranking import rank_image_to_text, rank_text_to_image
from .report import DirectionMetrics, LanguageMetrics, RetrievalReport, TranslationMetrics

if TYPE_CHECKING:
    from ..model.encoders import GroundedModel
    from ..pseudopairs.generate import CaptionEncoder

logger = get_logger("evaluation.retrieval")


def sharded_similarities(left: np.ndarray, right: np.ndarray, threads: Optional[int] = None,
                         shard_rows: int = 256) -> np.ndarray:
    """
    S = left rightᵀ computed in row shards, merged in row order.

    Each shard is an independent matmul, so the result does not depend on the
    thread count.
    """
    if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[1]:
        raise ShapeError("similarities", left.shape, right.shape)
    threads = threads or config.eval_threads
    starts = list(range(0, left.shape[0], shard_rows))
    if threads <= 1 or len(starts) <= 1:
        parts = [left[s:s + shard_rows] @ right.T for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: left[s:s + shard_rows] @ right.T, starts))
    if not parts:
        return np.zeros((0, right.shape[0]), dtype=np.result_type(left, right))
    return np.concatenate(parts, axis=0)


def language_metrics(
    image_embeddings: np.ndarray,
    caption_embeddings: np.ndarray,
    caption_image_rows: Sequence[int],
    threads: Optional[int] = None
) -> LanguageMetrics:
    """
    Both retrieval directions for one language.

    Args:
        image_embeddings: Unit rows of the images that have captions in this language
        caption_embeddings: Unit rows of the captions
        caption_image_rows: Row of each caption's image in ``image_embeddings``
    """
    scores = sharded_similarities(image_embeddings, caption_embeddings, threads)
    gold: List[List[int]] = [[] for _ in range(scores.shape[0])]
    for column, row in enumerate(caption_image_rows):
        gold[row].append(column)
    i2t = rank_image_to_text(scores, gold)
    t2i = rank_text_to_image(np.ascontiguousarray(scores.T), caption_image_rows)
    return LanguageMetrics(image_to_text=DirectionMetrics.from_ranks(i2t),
                           text_to_image=DirectionMetrics.from_ranks(t2i))


def evaluate_retrieval(
    model: "GroundedModel",
    corpus: CaptionedCorpus,
    languages: Optional[Sequence[str]] = None,
    threads: Optional[int] = None
) -> RetrievalReport:
    """
    R@1/5/10 and median/mean rank in both directions per caption language.

    Per language, only images with at least one caption in that language take part.

    Args:
        model: Model snapshot (read only)
        corpus: Evaluation corpus
        languages: Languages to evaluate (default: all present)
        threads: Shard count for the similarity matrices (default from config)

    Returns:
        RetrievalReport named after the corpus
    """
    languages = list(languages) if languages is not None else corpus.languages
    image_embeddings = model.encode_images(corpus.features)
    index = corpus.image_index()
    report = RetrievalReport(corpus=corpus.name)
    for lang in languages:
        captions = corpus.captions_in(lang)
        if not captions:
            raise DatasetError(f"{corpus.name}: no {lang} captions to evaluate")
        image_ids = sorted({r.image_id for r in captions}, key=index.__getitem__)
        local = {image_id: k for k, image_id in enumerate(image_ids)}
        rows = [index[i] for i in image_ids]
        metrics = language_metrics(
            image_embeddings[rows],
            model.encode_captions(captions),
            [local[r.image_id] for r in captions],
            threads,
        )
        report.languages[lang] = metrics
        logger.debug(f"{corpus.name}/{lang}: Sum {metrics.recall_sum:.1f}")
    return report


def translation_retrieval(
    encoder: "CaptionEncoder",
    captions_1: Sequence[CaptionRecord],
    captions_2: Sequence[CaptionRecord],
    threads: Optional[int] = None
) -> TranslationMetrics:
    """
    Retrieve the gold translation of each caption among all captions of the other language.

    Row i of ``captions_1`` and row i of ``captions_2`` are translations of each other.

    Raises:
        ShapeError: the two sides differ in length
    """
    if len(captions_1) != len(captions_2):
        raise ShapeError("translation_retrieval", (len(captions_1),), (len(captions_2),))
    if not captions_1:
        raise DatasetError("translation_retrieval needs at least one pair")
    first = encoder.encode_captions(captions_1)
    second = encoder.encode_captions(captions_2)
    scores = sharded_similarities(first, second, threads)
    gold = np.arange(len(captions_1))
    return TranslationMetrics(
        language_1=captions_1[0].language,
        language_2=captions_2[0].language,
        pairs=len(captions_1),
        forward=DirectionMetrics.from_ranks(rank_text_to_image(scores, gold)),
        backward=DirectionMetrics.from_ranks(rank_text_to_image(np.ascontiguousarray(scores.T), gold)),
    )


def corpus_translation_retrieval(
    encoder: "CaptionEncoder",
    corpus: CaptionedCorpus,
    language_1: str,
    language_2: str,
    threads: Optional[int] = None
) -> TranslationMetrics:
    """Translation retrieval on the aligned captions of a bilingual corpus."""
    pairs: List[Tuple[CaptionRecord, CaptionRecord]] = translation_pairs(corpus, language_1, language_2)
    if not pairs:
        raise DatasetError(f"{corpus.name}: no {language_1}-{language_2} translation pairs")
    return translation_retrieval(encoder, [a for a, _ in pairs], [b for _, b in pairs], threads)
