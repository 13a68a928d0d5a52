"""Desk-scale bilingual corpora with known ground truth.

Every image is assigned a latent concept. Its feature vector is the concept
latent plus Gaussian noise, and each of its captions lexicalizes the concept
with language-specific pseudo-words mixed with sampled distractor tokens.
The generator returns an aligned corpus (both languages on the same images)
and a disjoint corpus (second language only, different images); both share
the concept latents.

Random streams are independent per purpose (latents, lexicon, concept
assignment, captions, noise) so that ``concept_latents`` and
``build_lexicon`` can regenerate their part from the spec alone.
"""
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..utils.errors import ConfigError
from ..utils.logging import get_logger
from .corpus import CaptionedCorpus, CaptionRecord

logger = get_logger("data.synthetic")

_LATENT_STREAM = 0
_LEXICON_STREAM = 1
_ASSIGN_STREAM = 2
_CAPTION_STREAM = 3
_NOISE_STREAM = 4

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "kl", "tr")
_VOWELS = ("a", "e", "i", "o", "u", "ei", "au", "oo")

DISTRACTORS: Dict[str, Tuple[str, ...]] = {
    "en": ("a", "the", "with", "on", "in", "of", "and", "at", "near", "some"),
    "de": ("ein", "der", "mit", "auf", "im", "von", "und", "am", "bei", "eine"),
}


class SynthSpec(BaseModel):
    """Generator settings.

    Attributes:
        concepts: Number of latent concepts k
        images: Images per corpus n (k <= n)
        captions_per_image: Captions per language per image
        noise: Standard deviation of the feature noise
        seed: Generator seed
        feature_dim: Width of the feature vectors
        languages: (first language, second language)
        words_per_concept: Pseudo-words naming a concept in each language
        distractors: Distractor tokens added to every caption
    """
    model_config = ConfigDict(extra="forbid")

    concepts: int = 50
    images: int = 500
    captions_per_image: int = 2
    noise: float = 0.1
    seed: int = 1
    feature_dim: int = 2048
    languages: Tuple[str, str] = ("en", "de")
    words_per_concept: int = 2
    distractors: int = 2

    def check(self) -> None:
        """Raises ConfigError on an invalid combination of settings."""
        problems = []
        if self.concepts < 1:
            problems.append(f"concepts must be >= 1 (got {self.concepts})")
        if self.images < self.concepts:
            problems.append(f"images ({self.images}) must be >= concepts ({self.concepts})")
        if self.captions_per_image < 1:
            problems.append(f"captions_per_image must be >= 1 (got {self.captions_per_image})")
        if self.noise < 0:
            problems.append(f"noise must be >= 0 (got {self.noise})")
        if self.feature_dim < 1:
            problems.append(f"feature_dim must be >= 1 (got {self.feature_dim})")
        if self.words_per_concept < 1:
            problems.append(f"words_per_concept must be >= 1 (got {self.words_per_concept})")
        if self.distractors < 0:
            problems.append(f"distractors must be >= 0 (got {self.distractors})")
        if len(set(self.languages)) != 2:
            problems.append(f"languages must be two distinct tags (got {list(self.languages)})")
        if problems:
            raise ConfigError("Invalid synthetic spec: " + "; ".join(problems))


@dataclass(frozen=True)
class SyntheticLexicon:
    """Concept words and distractors per language."""
    words: Dict[str, Tuple[Tuple[str, ...], ...]]
    distractors: Dict[str, Tuple[str, ...]]

    def concept_of_word(self) -> Dict[str, int]:
        lookup = {}
        for per_concept in self.words.values():
            for concept, words in enumerate(per_concept):
                for word in words:
                    lookup[word] = concept
        return lookup


def _stream(spec: SynthSpec, purpose: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, purpose])


def concept_latents(spec: SynthSpec) -> np.ndarray:
    """k x feature_dim standard-normal concept latents (float32)."""
    spec.check()
    return _stream(spec, _LATENT_STREAM).standard_normal((spec.concepts, spec.feature_dim)).astype(np.float32)


def _pseudo_word(rng: np.random.Generator) -> str:
    syllables = int(rng.integers(2, 4))
    return "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                   for _ in range(syllables))


def build_lexicon(spec: SynthSpec) -> SyntheticLexicon:
    """Unique pseudo-words per (language, concept); never shared across languages."""
    spec.check()
    rng = _stream(spec, _LEXICON_STREAM)
    taken = set()
    distractors = {}
    for language in spec.languages:
        if language in DISTRACTORS:
            distractors[language] = DISTRACTORS[language]
        else:
            generated = []
            while len(generated) < 10:
                word = _pseudo_word(rng)
                if word not in taken:
                    taken.add(word)
                    generated.append(word)
            distractors[language] = tuple(generated)
        taken.update(distractors[language])

    words = {}
    for language in spec.languages:
        per_concept = []
        for _ in range(spec.concepts):
            chosen = []
            while len(chosen) < spec.words_per_concept:
                word = _pseudo_word(rng)
                if word not in taken:
                    taken.add(word)
                    chosen.append(word)
            per_concept.append(tuple(chosen))
        words[language] = tuple(per_concept)
    return SyntheticLexicon(words, distractors)


def _assign_concepts(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Every concept appears at least once; the rest are uniform, then shuffled."""
    extra = rng.integers(spec.concepts, size=spec.images - spec.concepts)
    assignment = np.concatenate([np.arange(spec.concepts), extra])
    return assignment[rng.permutation(spec.images)]


def _caption_tokens(
    concept: int,
    language: str,
    lexicon: SyntheticLexicon,
    spec: SynthSpec,
    rng: np.random.Generator
) -> Tuple[str, ...]:
    pool = lexicon.distractors[language]
    tokens = list(lexicon.words[language][concept])
    tokens += [pool[i] for i in rng.integers(len(pool), size=spec.distractors)]
    return tuple(tokens[i] for i in rng.permutation(len(tokens)))


def _build_corpus(
    name: str,
    prefix: str,
    languages: Tuple[str, ...],
    spec: SynthSpec,
    latents: np.ndarray,
    lexicon: SyntheticLexicon,
    streams: Dict[str, np.random.Generator]
) -> CaptionedCorpus:
    assignment = _assign_concepts(spec, streams["assign"])
    noise = streams["noise"].standard_normal((spec.images, spec.feature_dim)).astype(np.float32)
    features = latents[assignment] + np.float32(spec.noise) * noise

    image_ids = [f"{prefix}{i:05d}" for i in range(spec.images)]
    captions: List[CaptionRecord] = []
    for image_id, concept in zip(image_ids, assignment):
        for language in languages:
            for j in range(spec.captions_per_image):
                captions.append(CaptionRecord(
                    caption_id=f"{image_id}-{language}-{j}",
                    image_id=image_id,
                    language=language,
                    tokens=_caption_tokens(int(concept), language, lexicon, spec, streams["captions"]),
                ))
    return CaptionedCorpus(
        name=name,
        image_ids=tuple(image_ids),
        features=np.ascontiguousarray(features, dtype=np.float32),
        captions=tuple(captions),
        split="train",
        concepts={image_id: int(c) for image_id, c in zip(image_ids, assignment)},
    )


def generate_synthetic(spec: SynthSpec) -> Tuple[CaptionedCorpus, CaptionedCorpus]:
    """
    Generate the aligned and disjoint corpora.

    Args:
        spec: Generator settings

    Returns:
        (aligned corpus with both languages on images ``a00000..``,
         disjoint corpus with the second language only on images ``b00000..``)

    Raises:
        ConfigError: invalid spec (e.g. fewer images than concepts)
    """
    spec.check()
    latents = concept_latents(spec)
    lexicon = build_lexicon(spec)
    streams = {
        "assign": _stream(spec, _ASSIGN_STREAM),
        "captions": _stream(spec, _CAPTION_STREAM),
        "noise": _stream(spec, _NOISE_STREAM),
    }
    first, second = spec.languages
    aligned = _build_corpus("aligned", "a", (first, second), spec, latents, lexicon, streams)
    disjoint = _build_corpus("disjoint", "b", (second,), spec, latents, lexicon, streams)
    logger.info(
        f"Generated {spec.images} aligned images ({len(aligned.captions)} captions) and "
        f"{spec.images} disjoint images ({len(disjoint.captions)} captions) over {spec.concepts} concepts"
    )
    return aligned, disjoint
