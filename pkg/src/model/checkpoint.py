"""Checkpoint format.

Layout (little-endian)::

    b"GRNDRANK" | u32 version
    u32 token count | per token: u32 byte length, UTF-8 bytes
    u32 tensor count | per tensor: u32 name length, name, u32 rank,
                                   rank x u32 extents, f32 data
"""
import struct
from pathlib import Path
from typing import Dict

import numpy as np

from ..autograd import parameter
from ..utils.errors import CheckpointError
from ..utils.logging import get_logger
from .encoders import GroundedModel, ModelConfig, ModelParams
from .vocabulary import Vocabulary

logger = get_logger("model.checkpoint")

MAGIC = b"GRNDRANK"
VERSION = 1
_U32 = struct.Struct("<I")


def _pack_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return _U32.pack(len(raw)) + raw


def checkpoint_bytes(model: GroundedModel) -> bytes:
    """Serialize a model to the checkpoint byte layout."""
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(model.vocab))]
    chunks.extend(_pack_str(token) for token in model.vocab.tokens)
    named = model.params.named()
    chunks.append(_U32.pack(len(named)))
    for name, tensor in named:
        data = np.ascontiguousarray(tensor.data, dtype="<f4")
        chunks.append(_pack_str(name))
        chunks.append(_U32.pack(data.ndim))
        chunks.extend(_U32.pack(extent) for extent in data.shape)
        chunks.append(data.tobytes())
    return b"".join(chunks)


def save_checkpoint(path: Path, model: GroundedModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(model))
    logger.debug(f"Saved checkpoint {path}")
    return path


class _Reader:
    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.pos = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.blob):
            raise CheckpointError(f"{self.source}: truncated checkpoint")
        chunk = self.blob[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_checkpoint(path: Path, min_count: int = 1) -> GroundedModel:
    """
    Load a model. Dimensions are recovered from the stored tensor shapes.

    Raises:
        CheckpointError: bad magic, unsupported version, truncation or
            missing tensors
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    reader = _Reader(path.read_bytes(), str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a GRNDRANK checkpoint")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    tokens = [reader.string() for _ in range(reader.u32())]
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.string()
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(reader.take(4 * count), dtype="<f4").astype(np.float32).reshape(shape)
        tensors[name] = data
    if reader.pos != len(reader.blob):
        raise CheckpointError(f"{path}: trailing bytes after the last tensor")

    expected = [name for name in ModelParams.__dataclass_fields__]
    missing = [name for name in expected if name not in tensors]
    if missing:
        raise CheckpointError(f"{path}: missing tensors {missing}")
    params = ModelParams(**{
        name: parameter(tensors[name], name=name, dtype=np.float32) for name in expected
    })
    config = ModelConfig(
        word_dim=params.word_dim,
        hidden_dim=params.hidden_dim,
        feature_dim=params.feature_dim,
        min_count=min_count,
    )
    return GroundedModel(Vocabulary(tokens), params, config)
