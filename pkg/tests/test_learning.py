"""Desk-scale learning runs on synthetic corpora (slow: run with ``-m slow``)."""
import numpy as np
import pytest

from src.data.c2c import build_c2c_pairs
from src.data.corpus import split_corpus
from src.data.sampling import DatasetSource
from src.data.synthetic import SynthSpec, generate_synthetic
from src.evaluation.retrieval import evaluate_retrieval
from src.model.encoders import GroundedModel, ModelConfig
from src.model.vocabulary import build_vocabulary
from src.pseudopairs.diagnostics import diagnose
from src.pseudopairs.generate import generate_pseudopairs
from src.training.cycle import PseudoPairConfig, run_pseudopair_cycle
from src.training.evaluator import ValidationEvaluator
from src.training.trainer import TrainConfig, train

pytestmark = pytest.mark.slow

MODEL = ModelConfig(word_dim=32, hidden_dim=64, feature_dim=64, min_count=1, init_scale=0.1)
TRAIN = TrainConfig(batch_size=64, learning_rate=0.002, eval_interval_updates=250,
                    patience_inspections=4, max_updates=10000)


def _fit(sources, val, seed):
    vocab = build_vocabulary([s.corpus for s in sources], MODEL.min_count)
    model = GroundedModel.create(vocab, MODEL, seed)
    return train(model, sources, TRAIN.model_copy(update={"seed": seed}), ValidationEvaluator([val])).model


@pytest.fixture(scope="module")
def bilingual_splits():
    spec = SynthSpec(concepts=50, images=1100, captions_per_image=2, noise=0.1, seed=1, feature_dim=64)
    aligned, disjoint = generate_synthetic(spec)
    train_part, val_part, test_part = split_corpus(aligned, 100, 500, seed=1)
    return train_part, val_part, test_part, disjoint


@pytest.fixture(scope="module")
def bilingual_model(bilingual_splits):
    train_part, val_part, _, _ = bilingual_splits
    source = DatasetSource(train_part, c2c=build_c2c_pairs(train_part, "en", "de"))
    return _fit([source], val_part, seed=1)


def test_bilingual_model_beats_chance_twentyfold(bilingual_model, bilingual_splits):
    test_part = bilingual_splits[2]
    assert len(test_part.image_ids) == 500
    report = evaluate_retrieval(bilingual_model, test_part)
    # chance R@10 over 500 images is 2%
    for language in ("en", "de"):
        assert report.languages[language].text_to_image.r10 >= 40.0


def test_trained_pseudopairs_match_concepts(bilingual_model, bilingual_splits):
    train_part, _, _, disjoint = bilingual_splits
    pairs = generate_pseudopairs(bilingual_model, train_part, disjoint, "en", "de")
    stats = diagnose(pairs, train_part, disjoint)
    # chance is 1/50
    assert stats.concept_agreement >= 10 / 50


def test_pseudopairs_do_not_hurt_disjoint_training():
    gaps = []
    for seed in (1, 2, 3):
        spec = SynthSpec(concepts=50, images=800, captions_per_image=2, noise=0.1, seed=seed, feature_dim=64)
        aligned, disjoint = generate_synthetic(spec)
        train_a, val_a, test_a = split_corpus(aligned, 100, 200, seed=seed)
        english = train_a.restrict_languages(["en"])
        sources = [DatasetSource(english), DatasetSource(disjoint)]
        evaluator = ValidationEvaluator([val_a])
        baseline = _fit(sources, val_a, seed)
        baseline_score = evaluate_retrieval(baseline, test_a).sum_of_sums

        pseudo = PseudoPairConfig(source_corpus=english.name, target_corpus=disjoint.name, mode="fine-tune")
        result = run_pseudopair_cycle(baseline, sources, english, disjoint, pseudo,
                                      TRAIN.model_copy(update={"seed": seed}), evaluator)
        gaps.append(evaluate_retrieval(result.model, test_a).sum_of_sums - baseline_score)
    assert float(np.mean(gaps)) >= -1.0
