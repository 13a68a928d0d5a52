"""Captioned corpora, file formats, c2c pairs, batch sampling and synthetic data."""

from .corpus import CaptionedCorpus, CaptionRecord, PROVENANCES, split_corpus, tokenize
from .io import load_corpus, read_captions, read_features, save_corpus, write_captions, write_features
from .c2c import C2CPair, C2CPairSet, build_c2c_pairs
from .sampling import CAPTION_CAPTION, IMAGE_CAPTION, Batch, BatchSampler, DatasetSource, sample_batch
from .synthetic import SynthSpec, build_lexicon, concept_latents, generate_synthetic
from .translations import ingest_translations, translation_pairs

__all__ = [
    'CaptionedCorpus',
    'CaptionRecord',
    'PROVENANCES',
    'split_corpus',
    'tokenize',
    'load_corpus',
    'read_captions',
    'read_features',
    'save_corpus',
    'write_captions',
    'write_features',
    'C2CPair',
    'C2CPairSet',
    'build_c2c_pairs',
    'CAPTION_CAPTION',
    'IMAGE_CAPTION',
    'Batch',
    'BatchSampler',
    'DatasetSource',
    'sample_batch',
    'SynthSpec',
    'build_lexicon',
    'concept_latents',
    'generate_synthetic',
    'ingest_translations',
    'translation_pairs',
]
