"""Shared vocabulary: one index per word-form, whatever its language."""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..data.corpus import CaptionedCorpus
from ..utils.errors import DatasetError
from ..utils.logging import get_logger

logger = get_logger("model.vocabulary")

PAD = "<pad>"
UNK = "<unk>"


def pad_sequences(sequences: Sequence[Sequence[int]], pad_id: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Right-pad id sequences into a matrix; returns (ids, lengths)."""
    lengths = np.array([len(s) for s in sequences], dtype=np.int64)
    width = int(lengths.max()) if len(sequences) else 0
    ids = np.full((len(sequences), width), pad_id, dtype=np.int64)
    for i, seq in enumerate(sequences):
        ids[i, :len(seq)] = seq
    return ids, lengths


@dataclass
class Vocabulary:
    """Token <-> index map with ``<pad>`` at 0 and ``<unk>`` at 1."""
    tokens: List[str]
    index: Dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.tokens[:2] != [PAD, UNK]:
            raise ValueError("Vocabulary must start with <pad>, <unk>")
        self.index = {token: i for i, token in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("Vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.index.get(t, 1) for t in tokens]

    def encode_padded(self, token_lists: Sequence[Sequence[str]]) -> Tuple[np.ndarray, np.ndarray]:
        """Encode and right-pad several token lists; returns (ids, lengths)."""
        return pad_sequences([self.encode(tokens) for tokens in token_lists], self.pad_id)


def build_vocabulary(corpora: Iterable[CaptionedCorpus], min_count: int = 1) -> Vocabulary:
    """
    Build a vocabulary over all corpora pooled together.

    Language tags are ignored, so identical word-forms from different
    languages share an index. Order is frequency descending, then
    lexicographic.

    Args:
        corpora: Corpora whose captions are counted
        min_count: Minimum pooled frequency to get an index

    Returns:
        Vocabulary

    Raises:
        DatasetError: no corpora given
    """
    corpora = list(corpora)
    if not corpora:
        raise DatasetError("Cannot build a vocabulary from no corpora")
    counts: Counter = Counter()
    for corpus in corpora:
        for record in corpus.captions:
            counts.update(record.tokens)
    for special in (PAD, UNK):
        counts.pop(special, None)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    logger.info(f"Vocabulary: {len(kept)} of {len(counts)} word-forms (min_count={min_count})")
    return Vocabulary([PAD, UNK] + kept)
