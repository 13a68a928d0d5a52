"""Pair files (JSON-lines) and diagnostics documents (JSON)."""
import json
from pathlib import Path

from ..data.io import read_jsonl, write_jsonl
from ..utils.errors import DatasetError
from .diagnostics import PseudoPairDiagnostics
from .generate import PseudoPair, PseudoPairSet


def write_pairs(path: Path, pairs: PseudoPairSet) -> Path:
    write_jsonl(path, (p.to_dict() for p in pairs))
    return Path(path)


def read_pairs(path: Path, source_language: str = "", target_language: str = "") -> PseudoPairSet:
    """Read a pair file; filtering metadata is not stored in it."""
    pairs = []
    for line_no, row in enumerate(read_jsonl(path), 1):
        try:
            pairs.append(PseudoPair(
                target_caption_id=str(row["target_caption_id"]),
                source_caption_id=str(row["source_caption_id"]),
                target_image_id=str(row["target_image_id"]),
                similarity=float(row["similarity"]),
            ))
        except KeyError as e:
            raise DatasetError(f"{path}:{line_no}: missing field {e}") from e
    return PseudoPairSet(tuple(pairs), source_language, target_language)


def write_diagnostics(path: Path, diagnostics: PseudoPairDiagnostics) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(diagnostics.model_dump(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_diagnostics(path: Path) -> PseudoPairDiagnostics:
    return PseudoPairDiagnostics.model_validate_json(Path(path).read_text(encoding="utf-8"))
