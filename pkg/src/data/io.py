"""Corpus file formats.

Feature file (little-endian)::

    b"IMGF" | u32 version=1 | u32 count | u32 dim | count*dim f32 row-major |
    count null-terminated UTF-8 image ids

Captions are JSON-lines, one object per caption:
``{"caption_id", "image_id", "language", "text"}`` plus an optional
``"provenance"`` (defaults to "original"). Ground-truth concepts of synthetic
corpora live in a ``<name>.concepts.json`` sidecar.
"""
import json
import struct
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import DatasetError, DimensionMismatchError, FeatureFormatError
from ..utils.logging import get_logger
from .corpus import CaptionedCorpus, CaptionRecord, tokenize

logger = get_logger("data.io")

FEATURE_MAGIC = b"IMGF"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_features(path: Path, image_ids: Sequence[str], features: np.ndarray) -> None:
    """Write an IMGF feature file."""
    features = np.asarray(features, dtype="<f4")
    if features.ndim != 2 or features.shape[0] != len(image_ids):
        raise DimensionMismatchError(
            f"{len(image_ids)} image ids but features of shape {features.shape}"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, features.shape[0], features.shape[1]))
        f.write(np.ascontiguousarray(features).tobytes())
        for image_id in image_ids:
            f.write(image_id.encode("utf-8") + b"\x00")


def read_features(path: Path, expected_dim: Optional[int] = None) -> Tuple[List[str], np.ndarray]:
    """
    Read an IMGF feature file.

    Args:
        path: Feature file
        expected_dim: When given, the stored width must equal it

    Returns:
        (image ids, float32 feature matrix)

    Raises:
        FeatureFormatError: wrong magic, version or truncated payload
        DimensionMismatchError: width differs from ``expected_dim``
    """
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FeatureFormatError(f"{path}: file too short for a feature header")
    magic, version, count, dim = _HEADER.unpack_from(blob, 0)
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise FeatureFormatError(f"{path}: unsupported feature file version {version}")
    if expected_dim is not None and dim != expected_dim:
        raise DimensionMismatchError(f"{path}: feature width {dim}, expected {expected_dim}")
    payload = count * dim * 4
    start = _HEADER.size
    if len(blob) < start + payload:
        raise FeatureFormatError(f"{path}: payload holds fewer than {count}x{dim} values")
    features = np.frombuffer(blob, dtype="<f4", count=count * dim, offset=start)
    features = features.astype(np.float32).reshape(count, dim)
    names = blob[start + payload:].split(b"\x00")
    if len(names) < count + 1 or any(n for n in names[count:]):
        raise FeatureFormatError(f"{path}: expected {count} null-terminated image ids")
    image_ids = [n.decode("utf-8") for n in names[:count]]
    return image_ids, features


def _iter_jsonl(path: Path) -> Iterator[Tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{line_no}: invalid JSON ({e})") from e


def read_jsonl(path: Path) -> List[dict]:
    """Read a JSON-lines file into a list of objects."""
    return [obj for _, obj in _iter_jsonl(Path(path))]


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    """Write objects as JSON-lines with stable key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_captions(path: Path) -> List[CaptionRecord]:
    """Read a captions JSON-lines file, tokenizing on load."""
    records = []
    for line_no, obj in _iter_jsonl(Path(path)):
        try:
            records.append(CaptionRecord(
                caption_id=str(obj["caption_id"]),
                image_id=str(obj["image_id"]),
                language=str(obj["language"]),
                tokens=tuple(tokenize(str(obj["text"]))),
                provenance=str(obj.get("provenance", "original")),
            ))
        except KeyError as e:
            raise DatasetError(f"{path}:{line_no}: missing field {e}") from e
    return records


def write_captions(path: Path, captions: Iterable[CaptionRecord]) -> None:
    write_jsonl(path, (
        {
            "caption_id": r.caption_id,
            "image_id": r.image_id,
            "language": r.language,
            "text": r.text,
            "provenance": r.provenance,
        }
        for r in captions
    ))


def concepts_path_for(captions_path: Path) -> Path:
    captions_path = Path(captions_path)
    stem = captions_path.name
    for suffix in (".captions.jsonl", ".jsonl"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    return captions_path.with_name(f"{stem}.concepts.json")


def load_corpus(
    features_path: Path,
    captions_path: Path,
    name: Optional[str] = None,
    split: str = "train",
    expected_dim: Optional[int] = None
) -> CaptionedCorpus:
    """
    Load a corpus and validate its cross-references.

    A ``.concepts.json`` sidecar next to the captions file is picked up when
    present.

    Raises:
        FeatureFormatError, DimensionMismatchError, DanglingImageError
    """
    image_ids, features = read_features(features_path, expected_dim)
    captions = read_captions(captions_path)
    concepts = None
    sidecar = concepts_path_for(captions_path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as f:
            concepts = {str(k): int(v) for k, v in json.load(f).items()}
    corpus = CaptionedCorpus(
        name=name or Path(captions_path).name.split(".")[0],
        image_ids=tuple(image_ids),
        features=features,
        captions=tuple(captions),
        split=split,
        concepts=concepts,
    )
    logger.debug(f"Loaded corpus {corpus.name}: {len(image_ids)} images, {len(captions)} captions")
    return corpus


def save_corpus(corpus: CaptionedCorpus, directory: Path) -> Dict[str, str]:
    """
    Write a corpus as ``<name>.imgf`` + ``<name>.captions.jsonl`` (+ concepts).

    Returns:
        Mapping of file role to path
    """
    directory = Path(directory)
    features_path = directory / f"{corpus.name}.imgf"
    captions_path = directory / f"{corpus.name}.captions.jsonl"
    write_features(features_path, corpus.image_ids, corpus.features)
    write_captions(captions_path, corpus.captions)
    files = {"features": str(features_path), "captions": str(captions_path)}
    if corpus.concepts is not None:
        concepts_path = concepts_path_for(captions_path)
        with open(concepts_path, "w", encoding="utf-8") as f:
            json.dump(corpus.concepts, f, sort_keys=True)
        files["concepts"] = str(concepts_path)
    return files
