"""Tests for corpora, feature files, c2c pairs, sampling, translations and the generator."""
import json
import logging

import numpy as np
import pytest

from src.data.c2c import build_c2c_pairs
from src.data.corpus import CaptionedCorpus, CaptionRecord, split_corpus, tokenize
from src.data.io import load_corpus, read_features, save_corpus, write_captions, write_features
from src.data.sampling import CAPTION_CAPTION, IMAGE_CAPTION, BatchSampler, DatasetSource, sample_batch
from src.data.synthetic import SynthSpec, build_lexicon, concept_latents, generate_synthetic
from src.data.translations import ingest_translations, translated_caption_id, translation_pairs
from src.model.vocabulary import build_vocabulary
from src.utils.errors import (
    ConfigError,
    DanglingImageError,
    DatasetError,
    DimensionMismatchError,
    DuplicateCaptionError,
    DuplicateImageError,
    FeatureFormatError,
    UnknownCaptionError,
)
from tests.conftest import make_corpus


def _five_by_five():
    """Three images with five captions per language each."""
    return make_corpus({
        f"img{i}": {
            "en": [f"english caption {i} {j}" for j in range(5)],
            "de": [f"deutsche beschreibung {i} {j}" for j in range(5)],
        }
        for i in range(3)
    })


def test_tokenize_strips_punctuation():
    assert tokenize("A dog, running!  “Fast” ...") == ["a", "dog", "running", "fast"]


def test_caption_without_tokens_rejected():
    with pytest.raises(DatasetError):
        CaptionRecord("c1", "i1", "en", ())


# Loading and saving

def test_load_corpus_reads_all_images_and_captions(tmp_path):
    corpus = _five_by_five()
    files = save_corpus(corpus, tmp_path)
    loaded = load_corpus(files["features"], files["captions"], name="toy")
    assert loaded.image_ids == ("img0", "img1", "img2")
    assert len(loaded.captions) == 30
    assert loaded.languages == ["en", "de"]
    np.testing.assert_array_equal(loaded.features, corpus.features)
    assert [r.caption_id for r in loaded.captions] == [r.caption_id for r in corpus.captions]


def test_dangling_image_id(tmp_path):
    corpus = make_corpus({"img1": {"en": ["a dog"]}})
    write_features(tmp_path / "f.imgf", corpus.image_ids, corpus.features)
    write_captions(tmp_path / "c.jsonl", [CaptionRecord("x", "ghost", "en", ("a", "cat"))])
    with pytest.raises(DanglingImageError) as info:
        load_corpus(tmp_path / "f.imgf", tmp_path / "c.jsonl")
    assert info.value.image_id == "ghost"


def test_feature_width_checked(tmp_path):
    write_features(tmp_path / "f.imgf", ["i1", "i2"], np.zeros((2, 4)))
    with pytest.raises(DimensionMismatchError):
        read_features(tmp_path / "f.imgf", expected_dim=5)


def test_feature_file_bad_magic(tmp_path):
    write_features(tmp_path / "f.imgf", ["i1"], np.ones((1, 3)))
    blob = (tmp_path / "f.imgf").read_bytes()
    (tmp_path / "bad.imgf").write_bytes(b"JPEG" + blob[4:])
    with pytest.raises(FeatureFormatError):
        read_features(tmp_path / "bad.imgf")


def test_feature_file_truncated(tmp_path):
    write_features(tmp_path / "f.imgf", ["i1", "i2"], np.ones((2, 3)))
    blob = (tmp_path / "f.imgf").read_bytes()
    (tmp_path / "short.imgf").write_bytes(blob[:20])
    with pytest.raises(FeatureFormatError):
        read_features(tmp_path / "short.imgf")


def test_duplicate_caption_ids_rejected():
    records = (CaptionRecord("c", "i1", "en", ("a",)), CaptionRecord("c", "i1", "de", ("b",)))
    with pytest.raises(DuplicateCaptionError):
        CaptionedCorpus("dup", ("i1",), np.zeros((1, 2), dtype=np.float32), records)


def test_duplicate_image_ids_rejected():
    records = (CaptionRecord("c", "i1", "en", ("a",)),)
    with pytest.raises(DuplicateImageError) as excinfo:
        CaptionedCorpus("dup", ("i1", "i1"), np.zeros((2, 2), dtype=np.float32), records)
    assert not isinstance(excinfo.value, DuplicateCaptionError)
    assert isinstance(excinfo.value, DatasetError)


def test_concepts_sidecar_round_trip(tmp_path, tiny_synthetic):
    aligned, _ = tiny_synthetic
    files = save_corpus(aligned, tmp_path)
    loaded = load_corpus(files["features"], files["captions"])
    assert loaded.name == "aligned"
    assert loaded.concepts == aligned.concepts


def test_split_corpus_is_disjoint_and_seeded(tiny_synthetic):
    aligned, _ = tiny_synthetic
    train, val, test = split_corpus(aligned, 8, 8, seed=3)
    assert (len(train.image_ids), len(val.image_ids), len(test.image_ids)) == (24, 8, 8)
    assert not set(train.image_ids) & set(val.image_ids)
    assert not set(val.image_ids) & set(test.image_ids)
    assert test.split == "test" and test.name == "aligned-test"
    assert split_corpus(aligned, 8, 8, seed=3)[1].image_ids == val.image_ids
    with pytest.raises(DatasetError):
        split_corpus(aligned, 20, 20, seed=3)


# Caption-caption pairs

def test_c2c_pairs_cross_product_per_image():
    corpus = make_corpus({"img1": {
        "en": [f"english {j}" for j in range(5)],
        "de": [f"deutsch {j}" for j in range(5)],
    }})
    pairs = build_c2c_pairs(corpus, "en", "de")
    assert len(pairs) == 25
    assert {p.image_id for p in pairs.pairs} == {"img1"}


def test_c2c_single_caption_each():
    corpus = make_corpus({"img1": {"en": ["a dog"], "de": ["ein hund"]}})
    assert len(build_c2c_pairs(corpus, "en", "de")) == 1


def test_c2c_missing_language_gives_no_pairs():
    corpus = make_corpus({"img1": {"en": ["a dog", "the dog"]}})
    assert len(build_c2c_pairs(corpus, "en", "de")) == 0


def test_c2c_same_language_rejected(toy_corpus):
    with pytest.raises(ValueError):
        build_c2c_pairs(toy_corpus, "en", "en")


def test_c2c_pair_count_is_sum_of_products():
    rng = np.random.default_rng(0)
    layout = {
        f"img{i}": {
            "en": [f"e {i} {j}" for j in range(int(rng.integers(0, 4)))],
            "de": [f"d {i} {j}" for j in range(int(rng.integers(0, 4)))],
        }
        for i in range(20)
    }
    corpus = make_corpus(layout)
    pairs = build_c2c_pairs(corpus, "en", "de")
    assert len(pairs) == sum(len(v["en"]) * len(v["de"]) for v in layout.values())
    by_id = corpus.caption_index()
    for pair in pairs.pairs:
        first, second = by_id[pair.caption_id_1], by_id[pair.caption_id_2]
        assert first.language == "en" and second.language == "de"
        assert first.image_id == second.image_id == pair.image_id


def test_c2c_respects_provenances(tmp_path, toy_corpus):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps({"source_caption_id": "img3-en-0", "language": "de", "text": "zwei männer"}) + "\n")
    extended = ingest_translations(toy_corpus, path, "de")
    assert len(build_c2c_pairs(extended, "en", "de")) == 10
    assert len(build_c2c_pairs(extended, "en", "de", provenances=["original"])) == 9


# Sampling

def test_task_choice_is_fair_when_c2c_available(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    source = DatasetSource(toy_corpus, c2c=build_c2c_pairs(toy_corpus, "en", "de"))
    sampler = BatchSampler([source], 2, vocab, np.random.default_rng(0))
    tasks = [sampler.sample().task for _ in range(10_000)]
    share = tasks.count(CAPTION_CAPTION) / len(tasks)
    assert 0.48 <= share <= 0.52


def test_corpus_choice_is_uniform(toy_corpus):
    other = make_corpus({"x1": {"en": ["a bird"]}, "x2": {"en": ["a fish"]}}, name="other")
    vocab = build_vocabulary([toy_corpus, other])
    sampler = BatchSampler([DatasetSource(toy_corpus), DatasetSource(other)], 2, vocab,
                           np.random.default_rng(1))
    names = [sampler.sample().source for _ in range(10_000)]
    assert 0.48 <= names.count("other") / len(names) <= 0.52


def test_without_c2c_only_image_caption(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    sampler = BatchSampler([DatasetSource(toy_corpus)], 3, vocab, np.random.default_rng(2))
    assert {sampler.sample().task for _ in range(200)} == {IMAGE_CAPTION}


def test_image_caption_rows_are_aligned(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    batch = sample_batch([DatasetSource(toy_corpus)], 4, np.random.default_rng(3), vocab)
    captions = toy_corpus.caption_index()
    rows = toy_corpus.image_index()
    for i, (caption_id, image_id) in enumerate(zip(batch.caption_ids, batch.image_ids)):
        assert captions[caption_id].image_id == image_id
        np.testing.assert_array_equal(batch.images[i], toy_corpus.features[rows[image_id]])
        assert batch.lengths[i] == len(captions[caption_id].tokens)


def test_caption_caption_rows_share_images(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    source = DatasetSource(toy_corpus, c2c=build_c2c_pairs(toy_corpus, "en", "de"))
    sampler = BatchSampler([source], 4, vocab, np.random.default_rng(4))
    batch = next(b for b in iter(sampler.sample, None) if b.task == CAPTION_CAPTION)
    captions = toy_corpus.caption_index()
    for first, second, image_id in zip(batch.caption_ids, batch.caption_ids_2, batch.image_ids):
        assert captions[first].language == "en" and captions[second].language == "de"
        assert captions[first].image_id == captions[second].image_id == image_id


def test_sampling_is_seeded(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    source = DatasetSource(toy_corpus, c2c=build_c2c_pairs(toy_corpus, "en", "de"))
    first = BatchSampler([source], 3, vocab, np.random.default_rng(7))
    second = BatchSampler([source], 3, vocab, np.random.default_rng(7))
    for _ in range(20):
        a, b = first.sample(), second.sample()
        assert a.task == b.task and a.caption_ids == b.caption_ids


def test_small_source_samples_with_replacement_and_warns_once(toy_corpus, caplog):
    vocab = build_vocabulary([toy_corpus])
    sampler = BatchSampler([DatasetSource(toy_corpus, languages=("en",))], 8, vocab,
                           np.random.default_rng(5))
    with caplog.at_level(logging.WARNING, logger="grounded_ranking"):
        batches = [sampler.sample() for _ in range(5)]
    assert all(len(b) == 8 for b in batches)
    warnings = [r for r in caplog.records if "with replacement" in r.getMessage()]
    assert len(warnings) == 1


def test_sampler_rejects_single_item_batches(toy_corpus):
    vocab = build_vocabulary([toy_corpus])
    with pytest.raises(ValueError):
        BatchSampler([DatasetSource(toy_corpus)], 1, vocab, np.random.default_rng(0))


# Translations

def test_translation_pairs_follow_caption_order():
    pairs = translation_pairs(_five_by_five(), "en", "de")
    assert len(pairs) == 15
    assert all(a.caption_id[-1] == b.caption_id[-1] for a, b in pairs)


def test_ingest_translations(tmp_path, toy_corpus):
    path = tmp_path / "translations.jsonl"
    rows = [
        {"source_caption_id": "img1-en-0", "language": "de", "text": "Ein Hund läuft."},
        {"source_caption_id": "img2-en-1", "language": "de", "text": "Die Katze auf der Matte"},
    ]
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")
    extended = ingest_translations(toy_corpus, path, "de")
    added = extended.caption_index()[translated_caption_id("img1-en-0", "de")]
    assert added.image_id == "img1"
    assert added.provenance == "translated"
    assert added.tokens == ("ein", "hund", "läuft")
    assert len(extended.captions) == len(toy_corpus.captions) + 2


def test_empty_translation_file_leaves_corpus_unchanged(tmp_path, toy_corpus):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert ingest_translations(toy_corpus, path, "de") is toy_corpus


def test_translation_of_unknown_caption(tmp_path, toy_corpus):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps({"source_caption_id": "nope", "language": "de", "text": "x"}) + "\n")
    with pytest.raises(UnknownCaptionError):
        ingest_translations(toy_corpus, path, "de")


def test_caption_translated_twice(tmp_path, toy_corpus):
    path = tmp_path / "t.jsonl"
    row = json.dumps({"source_caption_id": "img1-en-0", "language": "de", "text": "hund"})
    path.write_text(row + "\n" + row + "\n")
    with pytest.raises(DuplicateCaptionError):
        ingest_translations(toy_corpus, path, "de")


def test_translation_language_mismatch(tmp_path, toy_corpus):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps({"source_caption_id": "img1-en-0", "language": "fr", "text": "chien"}) + "\n")
    with pytest.raises(DatasetError):
        ingest_translations(toy_corpus, path, "de")


# Synthetic generator

def test_generator_is_byte_identical_per_seed(tmp_path, tiny_spec):
    first = [save_corpus(c, tmp_path / "a") for c in generate_synthetic(tiny_spec)]
    second = [save_corpus(c, tmp_path / "b") for c in generate_synthetic(tiny_spec)]
    for files_a, files_b in zip(first, second):
        for role in files_a:
            assert open(files_a[role], "rb").read() == open(files_b[role], "rb").read()


def test_generator_layout(tiny_spec, tiny_synthetic):
    aligned, disjoint = tiny_synthetic
    assert len(aligned.image_ids) == len(disjoint.image_ids) == tiny_spec.images
    assert not set(aligned.image_ids) & set(disjoint.image_ids)
    assert aligned.languages == ["en", "de"]
    assert disjoint.languages == ["de"]
    assert len(aligned.captions) == tiny_spec.images * 2 * tiny_spec.captions_per_image
    assert set(aligned.concepts.values()) == set(range(tiny_spec.concepts))
    assert aligned.features.shape == (tiny_spec.images, tiny_spec.feature_dim)


def test_zero_noise_features_equal_concept_latents(tiny_spec):
    spec = tiny_spec.model_copy(update={"noise": 0.0})
    aligned, _ = generate_synthetic(spec)
    latents = concept_latents(spec)
    rows = aligned.image_index()
    for image_id, concept in aligned.concepts.items():
        np.testing.assert_array_equal(aligned.features[rows[image_id]], latents[concept])


def test_captions_name_their_concept(tiny_spec, tiny_synthetic):
    aligned, disjoint = tiny_synthetic
    lexicon = build_lexicon(tiny_spec)
    for corpus in (aligned, disjoint):
        for record in corpus.captions:
            concept = corpus.concept_of_caption(record)
            assert set(lexicon.words[record.language][concept]) <= set(record.tokens)


def test_lexicons_do_not_share_words(tiny_spec):
    lexicon = build_lexicon(tiny_spec)
    english = {w for words in lexicon.words["en"] for w in words}
    german = {w for words in lexicon.words["de"] for w in words}
    assert not english & german


def test_fewer_images_than_concepts_rejected():
    with pytest.raises(ConfigError):
        generate_synthetic(SynthSpec(concepts=10, images=5, feature_dim=4))
