"""Shared fixtures: tiny corpora, tiny models and experiment configs."""
import json
from pathlib import Path
from typing import Dict, List

import numpy as np
import pytest

from src.autograd import high_precision
from src.data.corpus import CaptionedCorpus, CaptionRecord, tokenize
from src.data.io import save_corpus
from src.data.synthetic import SynthSpec, generate_synthetic
from src.data.corpus import split_corpus
from src.model.encoders import GroundedModel, ModelConfig
from src.model.vocabulary import build_vocabulary

TINY_MODEL = {"word_dim": 6, "hidden_dim": 5, "feature_dim": 7, "min_count": 1, "init_scale": 0.5}


def make_corpus(
    captions: Dict[str, Dict[str, List[str]]],
    feature_dim: int = 7,
    seed: int = 0,
    name: str = "toy",
    split: str = "train"
) -> CaptionedCorpus:
    """Corpus from {image_id: {language: [caption text, ...]}} with random features."""
    image_ids = list(captions)
    rng = np.random.default_rng(seed)
    records = []
    for image_id in image_ids:
        for language, texts in captions[image_id].items():
            for j, text in enumerate(texts):
                records.append(CaptionRecord(
                    caption_id=f"{image_id}-{language}-{j}",
                    image_id=image_id,
                    language=language,
                    tokens=tuple(tokenize(text)),
                ))
    features = rng.standard_normal((len(image_ids), feature_dim)).astype(np.float32)
    return CaptionedCorpus(name, tuple(image_ids), features, tuple(records), split)


@pytest.fixture
def toy_corpus() -> CaptionedCorpus:
    """Three images with English and German captions."""
    return make_corpus({
        "img1": {"en": ["a dog runs", "the brown dog"], "de": ["ein hund rennt", "der braune hund"]},
        "img2": {"en": ["a cat sleeps", "the cat on a mat"], "de": ["eine katze schläft", "die katze"]},
        "img3": {"en": ["two men ride bikes"], "de": ["zwei männer fahren rad"]},
    })


@pytest.fixture
def toy_model(toy_corpus) -> GroundedModel:
    """Double-precision model over the toy corpus vocabulary."""
    vocab = build_vocabulary([toy_corpus])
    with high_precision():
        return GroundedModel.create(vocab, ModelConfig(**TINY_MODEL), seed=3)


@pytest.fixture
def tiny_spec() -> SynthSpec:
    return SynthSpec(concepts=4, images=40, captions_per_image=2, noise=0.1, seed=5, feature_dim=8)


@pytest.fixture
def tiny_synthetic(tiny_spec):
    return generate_synthetic(tiny_spec)


@pytest.fixture
def experiment_file(tmp_path, tiny_spec) -> Path:
    """Bilingual experiment over tiny synthetic corpora, written to disk."""
    aligned, disjoint = generate_synthetic(tiny_spec)
    data_dir = tmp_path / "data"
    files = {}
    for corpus in (aligned, disjoint):
        for part in split_corpus(corpus, 8, 8, seed=tiny_spec.seed):
            files[part.name] = save_corpus(part, data_dir)

    def entry(name, split, languages=None, c2c=None):
        item = {"name": name, "features": files[name]["features"], "captions": files[name]["captions"],
                "split": split}
        if languages:
            item["languages"] = languages
        if c2c:
            item["c2c"] = c2c
        return item

    experiment = {
        "name": "tiny",
        "corpora": [
            entry("aligned-train", "train", c2c=["en", "de"]),
            entry("disjoint-train", "train"),
            entry("aligned-val", "val"),
            entry("aligned-test", "test"),
        ],
        "model": {"word_dim": 8, "hidden_dim": 8, "feature_dim": tiny_spec.feature_dim},
        "train": {"batch_size": 8, "learning_rate": 0.01, "eval_interval_updates": 10,
                  "patience_inspections": 2, "max_updates": 30},
        "pseudopairs": {"source_corpus": "aligned-train", "target_corpus": "disjoint-train",
                        "source_language": "en", "target_language": "de"},
        "seeds": [1],
        "output_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(experiment, indent=2))
    return path
