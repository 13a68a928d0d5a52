"""Tests for the vocabulary, the sentence/image encoders and checkpoints."""
import numpy as np
import pytest

from src.autograd import Tape, high_precision, ops
from src.model.checkpoint import MAGIC, checkpoint_bytes, load_checkpoint, save_checkpoint
from src.model.encoders import (
    GroundedModel,
    ModelConfig,
    encode_images,
    encode_sentences,
    gru_final_state,
)
from src.model.vocabulary import PAD, UNK, Vocabulary, build_vocabulary, pad_sequences
from src.utils.errors import CheckpointError, DatasetError, ShapeError
from tests.conftest import TINY_MODEL, make_corpus


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _gru_oracle(params, ids):
    """Straightforward per-token GRU for a single unpadded sequence."""
    hidden = params.hidden_dim
    w, u, b = params.gru_input.data, params.gru_recurrent.data, params.gru_bias.data[0]
    h = np.zeros(hidden)
    for token in ids:
        x = params.embeddings.data[token]
        z = _sigmoid(x @ w[:, :hidden] + h @ u[:, :hidden] + b[:hidden])
        r = _sigmoid(x @ w[:, hidden:2 * hidden] + h @ u[:, hidden:2 * hidden] + b[hidden:2 * hidden])
        candidate = np.tanh(x @ w[:, 2 * hidden:] + (r * h) @ u[:, 2 * hidden:] + b[2 * hidden:])
        h = (1 - z) * h + z * candidate
    return h


# Vocabulary

def test_vocabulary_order_and_specials():
    corpus = make_corpus({"i1": {"en": ["a dog"], "de": ["a hund"]}})
    vocab = build_vocabulary([corpus])
    assert vocab.tokens == [PAD, UNK, "a", "dog", "hund"]
    assert vocab.pad_id == 0 and vocab.unk_id == 1


def test_identical_word_forms_share_an_index():
    corpus = make_corpus({"i1": {"en": ["the film"], "de": ["der film"]}})
    vocab = build_vocabulary([corpus])
    en, de = (r.tokens for r in corpus.captions)
    assert vocab.encode(en)[1] == vocab.encode(de)[1]
    assert vocab.tokens.count("film") == 1


def test_min_count_maps_rare_words_to_unk():
    corpus = make_corpus({"i1": {"en": ["a dog", "a cat"]}})
    vocab = build_vocabulary([corpus], min_count=2)
    assert vocab.tokens == [PAD, UNK, "a"]
    assert vocab.encode(["a", "dog"]) == [2, 1]


def test_vocabulary_is_deterministic(toy_corpus):
    assert build_vocabulary([toy_corpus]).tokens == build_vocabulary([toy_corpus]).tokens


def test_vocabulary_rejects_bad_tables():
    with pytest.raises(ValueError):
        Vocabulary(["a", "b"])
    with pytest.raises(DatasetError):
        build_vocabulary([])


def test_pad_sequences():
    ids, lengths = pad_sequences([[4, 5, 6], [7]])
    np.testing.assert_array_equal(ids, [[4, 5, 6], [7, 0, 0]])
    np.testing.assert_array_equal(lengths, [3, 1])


# Sentence encoder

def test_sentence_encoder_matches_reference_gru(toy_model):
    vocab, params = toy_model.vocab, toy_model.params
    sentences = [["a", "dog", "runs"], ["the", "cat", "on", "a", "mat"], ["die"]]
    ids, lengths = vocab.encode_padded(sentences)
    with high_precision():
        out = encode_sentences(params, vocab, ids, lengths, "en").numpy()
    for row, tokens in zip(out, sentences):
        state = _gru_oracle(params, vocab.encode(tokens))
        np.testing.assert_allclose(row, state / np.linalg.norm(state), atol=1e-10)


def test_sentence_rows_are_unit_norm(toy_model):
    ids, lengths = toy_model.vocab.encode_padded([["a", "dog"], ["zwei", "männer", "fahren", "rad"]])
    out = encode_sentences(toy_model.params, toy_model.vocab, ids, lengths).numpy()
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-6)


def test_padding_does_not_change_the_encoding(toy_model):
    vocab, params = toy_model.vocab, toy_model.params
    with high_precision():
        ids, lengths = vocab.encode_padded([["a", "dog"]])
        alone = encode_sentences(params, vocab, ids, lengths).numpy()
        ids, lengths = vocab.encode_padded([["a", "dog"], ["the", "cat", "on", "a", "mat"]])
        batched = encode_sentences(params, vocab, ids, lengths).numpy()
    np.testing.assert_allclose(batched[0], alone[0], atol=1e-12)


def test_batch_order_is_equivariant(toy_model):
    vocab, params = toy_model.vocab, toy_model.params
    sentences = [["a", "dog"], ["der", "braune", "hund"], ["eine", "katze"]]
    with high_precision():
        ids, lengths = vocab.encode_padded(sentences)
        forward = encode_sentences(params, vocab, ids, lengths).numpy()
        ids, lengths = vocab.encode_padded(sentences[::-1])
        reverse = encode_sentences(params, vocab, ids, lengths).numpy()
    np.testing.assert_allclose(forward, reverse[::-1], atol=1e-12)


def test_language_tag_does_not_reach_the_encoder(toy_model):
    ids, lengths = toy_model.vocab.encode_padded([["a", "dog"]])
    en = encode_sentences(toy_model.params, toy_model.vocab, ids, lengths, "en")
    de = encode_sentences(toy_model.params, toy_model.vocab, ids, lengths, "de")
    assert en.language == "en" and de.language == "de"
    np.testing.assert_array_equal(en.numpy(), de.numpy())


def test_zero_weights_give_degenerate_zero_vectors(toy_model):
    params = toy_model.params.copy()
    for tensor in params.tensors():
        tensor.data[...] = 0.0
    ids, lengths = toy_model.vocab.encode_padded([["a", "dog"]])
    batch = encode_sentences(params, toy_model.vocab, ids, lengths)
    np.testing.assert_array_equal(batch.numpy(), np.zeros((1, params.hidden_dim)))
    assert batch.degenerate.tolist() == [True]


def test_saturated_update_gate_takes_the_candidate(toy_model):
    params = toy_model.params.copy()
    hidden = params.hidden_dim
    params.gru_bias.data[0, :hidden] = 60.0
    token = toy_model.vocab.lookup("dog")
    with high_precision():
        state = gru_final_state(params, np.array([[token]]), np.array([1])).numpy()
    x = params.embeddings.data[token]
    expected = np.tanh(x @ params.gru_input.data[:, 2 * hidden:] + params.gru_bias.data[0, 2 * hidden:])
    np.testing.assert_allclose(state[0], expected, atol=1e-12)


def test_zero_length_sequence_rejected(toy_model):
    with pytest.raises(DatasetError):
        gru_final_state(toy_model.params, np.zeros((1, 2), dtype=np.int64), np.array([0]))


def test_embedding_table_must_match_vocabulary(toy_model):
    vocab = Vocabulary([PAD, UNK, "only"])
    ids, lengths = vocab.encode_padded([["only"]])
    with pytest.raises(ShapeError):
        encode_sentences(toy_model.params, vocab, ids, lengths)


def test_sentence_encoder_gradients_reach_every_parameter(toy_model):
    model = toy_model
    records = [r for r in make_corpus({"img1": {"en": ["a dog runs"]}}).captions]
    with high_precision():
        with Tape() as tape:
            batch = model.sentence_batch(records)
            loss = ops.sum(batch.vectors)
        grads = tape.backward(loss)
    for name in ("embeddings", "gru_input", "gru_recurrent", "gru_bias"):
        assert np.any(grads[getattr(model.params, name)] != 0), name


# Image encoder

def test_image_encoder_matches_projection(toy_model):
    params = toy_model.params
    features = np.random.default_rng(1).standard_normal((4, params.feature_dim))
    with high_precision():
        out = encode_images(params, features).numpy()
    projected = features @ params.image_projection.data + params.image_bias.data
    expected = projected / np.linalg.norm(projected, axis=1, keepdims=True)
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_identical_features_encode_identically(toy_model):
    row = np.random.default_rng(2).standard_normal((1, toy_model.params.feature_dim))
    out = toy_model.encode_images(np.repeat(row, 3, axis=0))
    assert np.array_equal(out[0], out[1]) and np.array_equal(out[1], out[2])


def test_feature_width_mismatch(toy_model):
    with pytest.raises(ShapeError):
        encode_images(toy_model.params, np.zeros((2, toy_model.params.feature_dim + 1)))


def test_model_creation_is_seeded(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    config = ModelConfig(**TINY_MODEL)
    a = GroundedModel.create(vocab, config, seed=9)
    b = GroundedModel.create(vocab, config, seed=9)
    c = GroundedModel.create(vocab, config, seed=10)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a.params.tensors(), b.params.tensors()))
    assert not np.array_equal(a.params.embeddings.data, c.params.embeddings.data)


def test_model_config_rejects_unknown_fields():
    with pytest.raises(ValueError):
        ModelConfig(word_dim=4, layers=2)


# Checkpoints

def test_checkpoint_round_trip_is_exact(tmp_path, toy_model):
    path = save_checkpoint(tmp_path / "model.ckpt", toy_model)
    loaded = load_checkpoint(path)
    assert loaded.vocab.tokens == toy_model.vocab.tokens
    assert loaded.config.hidden_dim == TINY_MODEL["hidden_dim"]
    for (name, original), (_, restored) in zip(toy_model.params.named(), loaded.params.named()):
        assert restored.data.dtype == np.float32
        assert np.array_equal(restored.data, original.data.astype(np.float32)), name
    assert checkpoint_bytes(loaded) == path.read_bytes()


def test_checkpoint_bad_magic(tmp_path, toy_model):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTRANK!" + checkpoint_bytes(toy_model)[len(MAGIC):])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_truncated(tmp_path, toy_model):
    path = tmp_path / "short.ckpt"
    path.write_bytes(checkpoint_bytes(toy_model)[:-3])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_encode_captions_without_tape(toy_model, toy_corpus):
    with Tape() as tape:
        out = toy_model.encode_captions(toy_corpus.captions_in("en"))
    assert out.shape == (5, TINY_MODEL["hidden_dim"])
    assert len(tape) == 0
