"""Retrieval reports: JSON models, sum-of-recall, seed averaging, text and CSV output."""
import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .ranking import mean_rank, median_rank, recall_at_k

RECALL_KS = (1, 5, 10)


class DirectionMetrics(BaseModel):
    """R@1/5/10 in percent plus median and mean rank for one retrieval direction."""
    r1: float
    r5: float
    r10: float
    median_rank: float
    mean_rank: float
    queries: int = 0

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "DirectionMetrics":
        r1, r5, r10 = (recall_at_k(ranks, k) for k in RECALL_KS)
        return cls(r1=r1, r5=r5, r10=r10, median_rank=median_rank(ranks),
                   mean_rank=mean_rank(ranks), queries=len(ranks))

    @property
    def recall_sum(self) -> float:
        return self.r1 + self.r5 + self.r10


class LanguageMetrics(BaseModel):
    """Both directions for one caption language."""
    image_to_text: DirectionMetrics
    text_to_image: DirectionMetrics
    recall_sum: float = 0.0

    def model_post_init(self, __context) -> None:
        self.recall_sum = self.image_to_text.recall_sum + self.text_to_image.recall_sum


class TranslationMetrics(BaseModel):
    """Translation retrieval between aligned ℓ1/ℓ2 captions."""
    language_1: str
    language_2: str
    pairs: int
    forward: DirectionMetrics = Field(description="ℓ1 caption retrieves its ℓ2 translation")
    backward: DirectionMetrics = Field(description="ℓ2 caption retrieves its ℓ1 translation")


class RetrievalReport(BaseModel):
    """Image↔text retrieval results of one model on one or more corpora."""
    corpus: str
    languages: Dict[str, LanguageMetrics] = Field(default_factory=dict)
    translation: List[TranslationMetrics] = Field(default_factory=list)
    seeds: int = 1

    @property
    def sum_of_sums(self) -> float:
        return sum_of_recall(self)[1]

    def to_json(self) -> str:
        payload = self.model_dump()
        payload["sum_of_sums"] = self.sum_of_sums
        return json.dumps(payload, indent=2)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "RetrievalReport":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        payload.pop("sum_of_sums", None)
        return cls.model_validate(payload)


def sum_of_recall(report: RetrievalReport) -> Tuple[Dict[str, float], float]:
    """
    Sum of the six recalls per language, and their total Sum(Sum).

    Returns:
        (per-language Sum, global Sum(Sum))
    """
    per_language = {lang: metrics.recall_sum for lang, metrics in report.languages.items()}
    return per_language, float(sum(per_language.values()))


def merge_reports(name: str, reports: Sequence[RetrievalReport]) -> RetrievalReport:
    """Combine reports over different corpora; a language may appear in only one of them."""
    merged = RetrievalReport(corpus=name)
    for report in reports:
        for lang, metrics in report.languages.items():
            key = lang if lang not in merged.languages else f"{report.corpus}:{lang}"
            merged.languages[key] = metrics
        merged.translation.extend(report.translation)
    return merged


def _average_direction(items: Sequence[DirectionMetrics]) -> DirectionMetrics:
    fields = ("r1", "r5", "r10", "median_rank", "mean_rank")
    averaged = {f: float(np.mean([getattr(d, f) for d in items])) for f in fields}
    return DirectionMetrics(**averaged, queries=items[0].queries)


def average_reports(reports: Sequence[RetrievalReport], name: Optional[str] = None) -> RetrievalReport:
    """
    Seed-averaged report; median ranks become fractional.

    Raises:
        ValueError: no reports, or reports over different languages
    """
    if not reports:
        raise ValueError("average_reports needs at least one report")
    languages = list(reports[0].languages)
    for report in reports[1:]:
        if list(report.languages) != languages:
            raise ValueError(f"Cannot average reports over {languages} and {list(report.languages)}")

    averaged = RetrievalReport(corpus=name or reports[0].corpus, seeds=len(reports))
    for lang in languages:
        averaged.languages[lang] = LanguageMetrics(
            image_to_text=_average_direction([r.languages[lang].image_to_text for r in reports]),
            text_to_image=_average_direction([r.languages[lang].text_to_image for r in reports]),
        )
    if all(len(r.translation) == len(reports[0].translation) for r in reports):
        for k, first in enumerate(reports[0].translation):
            averaged.translation.append(TranslationMetrics(
                language_1=first.language_1,
                language_2=first.language_2,
                pairs=first.pairs,
                forward=_average_direction([r.translation[k].forward for r in reports]),
                backward=_average_direction([r.translation[k].backward for r in reports]),
            ))
    return averaged


def report_to_text(report: RetrievalReport) -> str:
    """Aligned plain-text table, recalls to one decimal place."""
    header = (f"{'':<8}{'I→T R@1':>9}{'R@5':>7}{'R@10':>7}{'Medr':>7}"
              f"{'T→I R@1':>9}{'R@5':>7}{'R@10':>7}{'Medr':>7}{'Sum':>8}")
    lines = [f"{report.corpus}" + (f" (mean of {report.seeds} runs)" if report.seeds > 1 else ""), header]
    for lang, m in report.languages.items():
        a, b = m.image_to_text, m.text_to_image
        lines.append(
            f"{lang:<8}{a.r1:>9.1f}{a.r5:>7.1f}{a.r10:>7.1f}{a.median_rank:>7.1f}"
            f"{b.r1:>9.1f}{b.r5:>7.1f}{b.r10:>7.1f}{b.median_rank:>7.1f}{m.recall_sum:>8.1f}"
        )
    lines.append(f"{'Sum(Sum)':<8}{report.sum_of_sums:>75.1f}")
    for t in report.translation:
        lines.append(
            f"translation {t.language_1}→{t.language_2} R@1 {t.forward.r1:.1f}  "
            f"{t.language_2}→{t.language_1} R@1 {t.backward.r1:.1f}  ({t.pairs} pairs)"
        )
    return "\n".join(lines)


CSV_COLUMNS = ("label", "seed", "language", "i2t_r1", "i2t_r5", "i2t_r10", "t2i_r1", "t2i_r5", "t2i_r10",
               "sum", "sum_of_sums")


def reports_to_csv(rows: Sequence[Tuple[str, str, RetrievalReport]]) -> str:
    """
    Plot-ready CSV, one line per (label, seed, language).

    Args:
        rows: (label, seed tag, report) triples, e.g. ("max-violation", "1", report)
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for label, seed, report in rows:
        total = report.sum_of_sums
        for lang, m in report.languages.items():
            a, b = m.image_to_text, m.text_to_image
            writer.writerow([label, seed, lang] + [
                f"{v:.4f}" for v in (a.r1, a.r5, a.r10, b.r1, b.r5, b.r10, m.recall_sum, total)
            ])
    return buffer.getvalue()
