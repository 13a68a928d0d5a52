"""Validation scoring used for early stopping."""
from typing import List, Optional, Sequence

from ..data.corpus import CaptionedCorpus
from ..evaluation.report import RetrievalReport
from ..evaluation.retrieval import evaluate_retrieval
from ..model.encoders import GroundedModel
from ..utils.logging import get_logger

logger = get_logger("training.evaluator")


class ValidationEvaluator:
    """
    Sum(Sum) over validation corpora: the six recalls of every evaluated
    language, summed with equal weight across languages and corpora.

    Args:
        corpora: Validation corpora
        languages: Restrict scoring to these languages (None = every language
            of each corpus)
        threads: Shard count for similarity matrices; 1 keeps inspections
            single-threaded
    """

    def __init__(self, corpora: Sequence[CaptionedCorpus], languages: Optional[Sequence[str]] = None,
                 threads: int = 1):
        self.corpora = list(corpora)
        self.languages = list(languages) if languages else None
        self.threads = threads
        self.last_reports: List[RetrievalReport] = []
        if not self.corpora:
            raise ValueError("ValidationEvaluator needs at least one validation corpus")

    def _languages_of(self, corpus: CaptionedCorpus) -> List[str]:
        if self.languages is None:
            return corpus.languages
        return [lang for lang in corpus.languages if lang in self.languages]

    def __call__(self, model: GroundedModel) -> float:
        self.last_reports = []
        total = 0.0
        for corpus in self.corpora:
            languages = self._languages_of(corpus)
            if not languages:
                continue
            report = evaluate_retrieval(model, corpus, languages, threads=self.threads)
            self.last_reports.append(report)
            total += report.sum_of_sums
        logger.debug(f"Validation Sum(Sum) {total:.2f} over {len(self.last_reports)} corpora")
        return total
