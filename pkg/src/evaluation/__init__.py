"""Retrieval metrics and reports."""

from .ranking import mean_rank, median_rank, rank_image_to_text, rank_text_to_image, recall_at_k
from .report import (
    DirectionMetrics,
    LanguageMetrics,
    RetrievalReport,
    TranslationMetrics,
    average_reports,
    merge_reports,
    report_to_text,
    reports_to_csv,
    sum_of_recall,
)
from .retrieval import (
    corpus_translation_retrieval,
    evaluate_retrieval,
    language_metrics,
    sharded_similarities,
    translation_retrieval,
)

__all__ = [
    'mean_rank',
    'median_rank',
    'rank_image_to_text',
    'rank_text_to_image',
    'recall_at_k',
    'DirectionMetrics',
    'LanguageMetrics',
    'RetrievalReport',
    'TranslationMetrics',
    'average_reports',
    'merge_reports',
    'report_to_text',
    'reports_to_csv',
    'sum_of_recall',
    'corpus_translation_retrieval',
    'evaluate_retrieval',
    'language_metrics',
    'sharded_similarities',
    'translation_retrieval',
]
