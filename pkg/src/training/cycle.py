"""One pseudopair round: generate, filter, augment, then restart or fine-tune."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, field_validator

from ..data.c2c import build_c2c_pairs
from ..data.corpus import PROVENANCES, CaptionedCorpus
from ..data.sampling import DatasetSource
from ..evaluation.report import RetrievalReport
from ..model.encoders import GroundedModel
from ..model.vocabulary import build_vocabulary
from ..pseudopairs.diagnostics import PseudoPairDiagnostics, diagnose
from ..pseudopairs.filters import apply_filter
from ..pseudopairs.generate import PseudoPairSet, generate_pseudopairs, pairs_to_corpus
from ..utils.errors import PseudoPairError
from ..utils.logging import get_logger
from .trainer import Evaluator, TrainConfig, TrainLog, Trainer

logger = get_logger("training.cycle")

RESTART = "restart"
FINE_TUNE = "fine-tune"


class PseudoPairConfig(BaseModel):
    """Which corpora to pair, in which direction, and how to use the pairs.

    Pairs are created in one direction only: captions of ``target_corpus`` in
    ``target_language`` receive their nearest ``source_language`` caption
    from ``source_corpus``.

    ``source_provenances`` limits which source captions may be transferred;
    by default every source-language caption is a candidate.
    """
    model_config = ConfigDict(extra="forbid")

    source_corpus: str
    target_corpus: str
    source_language: str = "en"
    target_language: str = "de"
    filter: Literal["none", "keep-top-25", "remove-bottom-25"] = "none"
    mode: Literal["restart", "fine-tune"] = FINE_TUNE
    c2c: bool = False
    top_k: int = 150
    source_provenances: List[str] = list(PROVENANCES)

    @field_validator("source_provenances")
    @classmethod
    def known_provenances(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(PROVENANCES))
        if unknown or not value:
            raise ValueError(f"source_provenances must be a non-empty subset of {list(PROVENANCES)}, got {value}")
        return value


@dataclass
class CycleResult:
    """Outcome of a pseudopair round.

    Attributes:
        model: Best model of the retraining run
        pairs: Pairs after filtering
        diagnostics: Statistics of the filtered pairs
        augmented: Target corpus with the transferred captions
        before_score: Validation score of the base model
        after_score: Best validation score after retraining
        log: Retraining log
        before_reports / after_reports: Validation reports, when the evaluator keeps them
    """
    model: GroundedModel
    pairs: PseudoPairSet
    diagnostics: PseudoPairDiagnostics
    augmented: CaptionedCorpus
    before_score: float
    after_score: float
    log: TrainLog
    before_reports: List[RetrievalReport] = field(default_factory=list)
    after_reports: List[RetrievalReport] = field(default_factory=list)


def augment_sources(
    sources: Sequence[DatasetSource],
    augmented: CaptionedCorpus,
    target_name: str,
    pseudo: PseudoPairConfig
) -> List[DatasetSource]:
    """Swap the target corpus for its augmented version (or append it)."""
    c2c = build_c2c_pairs(augmented, pseudo.source_language, pseudo.target_language) if pseudo.c2c else None
    updated, replaced = [], False
    for source in sources:
        if source.corpus.name == target_name:
            updated.append(DatasetSource(augmented, None, c2c or source.c2c, source.provenances))
            replaced = True
        else:
            updated.append(source)
    if not replaced:
        updated.append(DatasetSource(augmented, None, c2c))
    return updated


def run_pseudopair_cycle(
    base_model: GroundedModel,
    sources: Sequence[DatasetSource],
    source_corpus: CaptionedCorpus,
    target_corpus: CaptionedCorpus,
    pseudo: PseudoPairConfig,
    train_config: TrainConfig,
    evaluator: Evaluator,
    reference: Optional[PseudoPairSet] = None,
    checkpoint_path: Optional[Path] = None,
    log_path: Optional[Path] = None
) -> CycleResult:
    """
    Generate pseudopairs with ``base_model`` and retrain on the augmented data.

    ``restart`` rebuilds the vocabulary over the augmented corpora and
    re-initializes parameters from ``train_config.seed``. ``fine-tune``
    continues from a copy of ``base_model`` with its vocabulary and a fresh
    optimizer; its first inspection is the base model's score.

    Raises:
        PseudoPairError: no pairs survive the filter
    """
    pairs = generate_pseudopairs(base_model, source_corpus, target_corpus,
                                 pseudo.source_language, pseudo.target_language,
                                 source_provenances=pseudo.source_provenances)
    filtered = apply_filter(pairs, pseudo.filter)
    if not len(filtered):
        raise PseudoPairError(f"No pseudopairs left after filter {pseudo.filter}")
    augmented = pairs_to_corpus(filtered, source_corpus, target_corpus, name=target_corpus.name)
    new_sources = augment_sources(sources, augmented, target_corpus.name, pseudo)

    before_score = float(evaluator(base_model))
    before_reports = list(getattr(evaluator, "last_reports", []))

    if pseudo.mode == RESTART:
        vocab = build_vocabulary([s.corpus for s in new_sources], base_model.config.min_count)
        model = GroundedModel.create(vocab, base_model.config, train_config.seed)
        config = train_config
    else:
        model = base_model.copy()
        config = train_config.model_copy(update={"initial_inspection": True})
    logger.info(f"Retraining ({pseudo.mode}) with {len(filtered)} pseudopairs added to {target_corpus.name}")

    result = Trainer(model, new_sources, config, evaluator, checkpoint_path, log_path).train()
    after_reports = []
    if hasattr(evaluator, "last_reports"):
        evaluator(result.model)
        after_reports = list(evaluator.last_reports)
    return CycleResult(
        model=result.model,
        pairs=filtered,
        diagnostics=diagnose(filtered, source_corpus, target_corpus, reference, pseudo.top_k),
        augmented=augmented,
        before_score=before_score,
        after_score=result.log.best_score,
        log=result.log,
        before_reports=before_reports,
        after_reports=after_reports,
    )
