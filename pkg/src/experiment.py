"""Experiment configuration documents.

An experiment is a JSON file validated by pydantic. Unknown fields are
rejected everywhere, and relative paths are resolved against the directory
of the config file.
"""
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .data.corpus import PROVENANCES
from .data.synthetic import SynthSpec
from .model.encoders import ModelConfig
from .model.losses import LossConfig
from .training.cycle import PseudoPairConfig
from .training.trainer import TrainConfig
from .utils.errors import ConfigError

__all__ = [
    "CorpusEntry",
    "ExperimentConfig",
    "LossConfig",
    "ModelConfig",
    "PseudoPairConfig",
    "SynthConfig",
    "TrainConfig",
    "TranslationEntry",
    "load_experiment",
]


class CorpusEntry(BaseModel):
    """A corpus on disk and the role it plays.

    Attributes:
        name: Name used to refer to the corpus
        features: IMGF feature file
        captions: Captions JSON-lines file
        split: train, val or test
        languages: Keep only captions in these languages (None = all)
        c2c: Language pair for the caption–caption task (train corpora)
        provenances: Caption provenances used by the image–caption task
    """
    model_config = ConfigDict(extra="forbid")

    name: str
    features: Path
    captions: Path
    split: Literal["train", "val", "test"] = "train"
    languages: Optional[List[str]] = None
    c2c: Optional[Tuple[str, str]] = None
    provenances: List[str] = Field(default_factory=lambda: list(PROVENANCES))

    @field_validator("provenances")
    @classmethod
    def _known_provenances(cls, value: List[str]) -> List[str]:
        unknown = [p for p in value if p not in PROVENANCES]
        if unknown:
            raise ValueError(f"unknown provenances {unknown}")
        return value


class TranslationEntry(BaseModel):
    """Machine-translated captions for one corpus."""
    model_config = ConfigDict(extra="forbid")

    corpus: str
    path: Path
    language: str


class SynthConfig(BaseModel):
    """Synthetic corpora and how to split them by image."""
    model_config = ConfigDict(extra="forbid")

    spec: SynthSpec = Field(default_factory=SynthSpec)
    val_images: int = Field(default=100, ge=1)
    test_images: int = Field(default=100, ge=1)


class ExperimentConfig(BaseModel):
    """Everything one experiment needs; all randomness flows from ``seeds``."""
    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    corpora: List[CorpusEntry] = Field(default_factory=list)
    translations: List[TranslationEntry] = Field(default_factory=list)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    pseudopairs: Optional[PseudoPairConfig] = None
    synth: Optional[SynthConfig] = None
    seeds: List[int] = Field(default_factory=lambda: [1])
    output_dir: Path = Path("runs/experiment")

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("seeds must not be empty")
        return value

    @model_validator(mode="after")
    def _references(self) -> "ExperimentConfig":
        names = [c.name for c in self.corpora]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate corpus names {duplicates}")
        for entry in self.translations:
            if entry.corpus not in names:
                raise ValueError(f"translation refers to unknown corpus {entry.corpus!r}")
        if self.pseudopairs is not None:
            for ref in (self.pseudopairs.source_corpus, self.pseudopairs.target_corpus):
                if ref not in names:
                    raise ValueError(f"pseudopairs refer to unknown corpus {ref!r}")
        return self

    def corpora_in(self, split: str) -> List[CorpusEntry]:
        return [c for c in self.corpora if c.split == split]

    def corpus(self, name: str) -> CorpusEntry:
        for entry in self.corpora:
            if entry.name == name:
                return entry
        raise ConfigError(f"Unknown corpus {name!r}")

    def resolve_paths(self, base: Path) -> "ExperimentConfig":
        """Copy with every relative path anchored at ``base``."""
        def anchor(p: Path) -> Path:
            return p if p.is_absolute() else base / p

        return self.model_copy(update={
            "corpora": [c.model_copy(update={"features": anchor(c.features), "captions": anchor(c.captions)})
                        for c in self.corpora],
            "translations": [t.model_copy(update={"path": anchor(t.path)}) for t in self.translations],
            "output_dir": anchor(self.output_dir),
        })

    def check_paths(self) -> None:
        """Raises ConfigError naming every referenced input file that does not exist."""
        missing = [str(p) for c in self.corpora for p in (c.features, c.captions) if not p.exists()]
        missing += [str(t.path) for t in self.translations if not t.path.exists()]
        if missing:
            raise ConfigError(f"Missing input files: {', '.join(missing)}")

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def load_experiment(
    path: Path,
    seeds: Optional[List[int]] = None,
    output_dir: Optional[Path] = None,
    check_paths: bool = True
) -> ExperimentConfig:
    """
    Load and validate an experiment config.

    Args:
        path: JSON config file
        seeds: Replaces the configured seeds (``--seed``)
        output_dir: Replaces the configured output directory (``--out``)
        check_paths: Require every referenced input file to exist

    Raises:
        ConfigError: unreadable file, invalid JSON, schema violation or missing inputs
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e

    if seeds is not None:
        payload["seeds"] = list(seeds)
    try:
        experiment = ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e

    experiment = experiment.resolve_paths(path.resolve().parent)
    if output_dir is not None:
        experiment = experiment.model_copy(update={"output_dir": Path(output_dir)})
    if check_paths:
        experiment.check_paths()
    return experiment
