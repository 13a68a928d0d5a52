"""Tests for the ranking losses."""
import numpy as np
import pytest

from src.autograd import Tape, constant, gradient_check, high_precision, ops, parameter
from src.model.encoders import EmbeddingBatch, encode_images
from src.model.losses import (
    LossConfig,
    c2c_loss,
    max_violation_loss,
    pair_loss,
    ranking_loss,
    reference_loss,
    similarity_matrix,
    sum_violation_loss,
    violation_costs,
)
from src.utils.errors import ShapeError

MAX = LossConfig(margin=0.2, variant="max-violation")
SUM = LossConfig(margin=0.2, variant="sum-violation")
# every hinge is active when the margin exceeds the cosine range
WIDE = LossConfig(margin=2.5, variant="sum-violation")


def _unit_batch(rows, modality="sentence"):
    return EmbeddingBatch(constant(rows), modality)


def test_similarity_of_orthonormal_rows_is_identity():
    basis = np.eye(3)
    s = similarity_matrix(_unit_batch(basis), _unit_batch(basis, "image"))
    np.testing.assert_allclose(s.numpy(), np.eye(3))


def test_similarity_dimension_mismatch():
    with pytest.raises(ShapeError):
        similarity_matrix(_unit_batch(np.eye(2)), _unit_batch(np.eye(3)))


def test_identity_similarities_cost_nothing():
    scores = constant(np.eye(4))
    assert max_violation_loss(scores, MAX).item() == 0.0
    assert sum_violation_loss(scores, SUM).item() == 0.0


def test_max_violation_uniform_two_by_two():
    scores = constant(np.full((2, 2), 0.5))
    assert max_violation_loss(scores, MAX).item() == pytest.approx(0.8, abs=1e-6)


def test_sum_violation_uniform_three_by_three():
    scores = constant(np.full((3, 3), 0.5))
    assert sum_violation_loss(scores, SUM).item() == pytest.approx(2.4, abs=1e-6)
    assert max_violation_loss(scores, MAX).item() == pytest.approx(1.2, abs=1e-6)


def test_single_item_batch_has_no_negatives():
    scores = constant([[0.3]])
    assert max_violation_loss(scores, MAX).item() == 0.0
    assert sum_violation_loss(scores, SUM).item() == 0.0


def test_non_square_matrix_rejected():
    with pytest.raises(ShapeError):
        ranking_loss(constant(np.zeros((2, 3))), MAX)


def test_mean_aggregation_divides_by_batch_size():
    scores = constant(np.full((3, 3), 0.5))
    mean = LossConfig(variant="sum-violation", aggregation="mean")
    assert ranking_loss(scores, mean).item() == pytest.approx(0.8, abs=1e-6)


@pytest.mark.parametrize("config", [MAX, SUM, LossConfig(margin=0.05, aggregation="mean")])
def test_matches_double_loop_oracle_exactly(config):
    rng = np.random.default_rng(11)
    with high_precision():
        for _ in range(200):
            matrix = rng.uniform(-1.0, 1.0, (8, 8))
            assert ranking_loss(constant(matrix), config).item() == reference_loss(matrix, config)


def test_max_violation_never_exceeds_sum_violation():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        matrix = constant(rng.uniform(-1.0, 1.0, (n, n)))
        assert max_violation_loss(matrix, MAX).item() <= sum_violation_loss(matrix, SUM).item() + 1e-6


def test_row_shift_keeps_hardest_negative():
    rng = np.random.default_rng(13)
    with high_precision():
        for _ in range(200):
            n = int(rng.integers(2, 10))
            matrix = rng.uniform(-1.0, 1.0, (n, n))
            shifted = matrix + rng.uniform(-3.0, 3.0, (n, 1))
            rows, _ = violation_costs(constant(matrix), WIDE.margin)
            shifted_rows, _ = violation_costs(constant(shifted), WIDE.margin)
            np.testing.assert_array_equal(ops.row_max(rows)[1], ops.row_max(shifted_rows)[1])
            np.testing.assert_allclose(rows.data, shifted_rows.data, atol=1e-12)


def test_max_violation_gradient_hits_hardest_negatives():
    scores = parameter(np.full((2, 2), 0.5))
    with Tape() as tape:
        loss = max_violation_loss(scores, MAX)
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[scores], [[-2.0, 2.0], [2.0, -2.0]])


def test_max_violation_gradient_check():
    with high_precision():
        scores = parameter(np.random.default_rng(3).uniform(-1, 1, (5, 5)), name="scores")
    errors = gradient_check(lambda: max_violation_loss(scores, MAX), [scores])
    assert errors["scores"] <= 1e-5


def test_pair_loss_requires_aligned_batches():
    with pytest.raises(ShapeError):
        pair_loss(_unit_batch(np.eye(3)), _unit_batch(np.eye(3)[:2]), MAX)


def test_c2c_loss_uses_the_same_formula():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((4, 3))
    b = rng.standard_normal((4, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    first, second = _unit_batch(a), _unit_batch(b)
    assert c2c_loss(first, second, MAX).item() == pair_loss(first, second, MAX).item()


def test_c2c_gradients_reach_both_languages(toy_model, toy_corpus):
    by_image = toy_corpus.captions_by_image()
    english = [next(r for r in caps if r.language == "en") for caps in by_image.values()]
    german = [next(r for r in caps if r.language == "de") for caps in by_image.values()]
    with high_precision():
        with Tape() as tape:
            loss = c2c_loss(toy_model.sentence_batch(english), toy_model.sentence_batch(german), WIDE)
        grads = tape.backward(loss)
    table = grads[toy_model.params.embeddings]
    vocab = toy_model.vocab
    assert np.any(table[vocab.lookup("dog")] != 0)
    assert np.any(table[vocab.lookup("hund")] != 0)


def test_image_caption_loss_gradient_check(toy_model, toy_corpus):
    records = [caps[0] for caps in toy_corpus.captions_by_image("en").values()]
    params = toy_model.params

    def build():
        captions = toy_model.sentence_batch(records)
        images = encode_images(params, toy_corpus.features.astype(np.float64))
        return pair_loss(images, captions, LossConfig(margin=1.0, variant="sum-violation"))

    with high_precision():
        errors = gradient_check(build, params.tensors())
    assert max(errors.values()) <= 1e-5, errors


def test_c2c_max_violation_gradient_check_on_four_sentences(toy_model, toy_corpus):
    english = toy_corpus.captions_in("en")[:4]
    german = toy_corpus.captions_in("de")[:4]
    config = LossConfig(margin=1.0, variant="max-violation")

    def build():
        return c2c_loss(toy_model.sentence_batch(english), toy_model.sentence_batch(german), config)

    with high_precision():
        errors = gradient_check(build, toy_model.params.tensors()[:4])
    assert max(errors.values()) <= 1e-5, errors
