"""Experiment pipeline: one method per CLI subcommand."""
import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .data.c2c import build_c2c_pairs
from .data.corpus import CaptionedCorpus, split_corpus
from .data.io import load_corpus, save_corpus
from .data.sampling import DatasetSource
from .data.synthetic import SynthSpec, generate_synthetic
from .data.translations import ingest_translations
from .evaluation.report import RetrievalReport, average_reports, merge_reports, reports_to_csv
from .evaluation.retrieval import corpus_translation_retrieval, evaluate_retrieval
from .experiment import CorpusEntry, ExperimentConfig, SynthConfig
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.encoders import GroundedModel
from .model.vocabulary import build_vocabulary
from .pseudopairs.diagnostics import diagnose
from .pseudopairs.filters import apply_filter
from .pseudopairs.generate import generate_pseudopairs
from .pseudopairs.io import read_pairs, write_diagnostics, write_pairs
from .training.cycle import run_pseudopair_cycle
from .training.evaluator import ValidationEvaluator
from .training.trainer import TrainConfig, Trainer
from .utils.config import config
from .utils.errors import ConfigError
from .utils.logging import get_logger

logger = get_logger("pipeline")


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_run_metadata(directory: Path, command: str, **extra) -> Path:
    """Timestamps live only in this sidecar so that every other output is reproducible."""
    return write_json(Path(directory) / "run_metadata.json", {
        "command": command,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        **extra,
    })


def starter_experiment(files: Dict[str, Dict[str, str]], synth: SynthConfig, output_dir: Path) -> dict:
    """Disjoint-setting experiment over freshly generated corpora, using the desk-scale presets."""
    first, second = synth.spec.languages
    model = {**config.get_desk_preset("model"), "feature_dim": synth.spec.feature_dim}
    train = config.get_desk_preset("train")

    def entry(name: str, split: str, languages: List[str]) -> dict:
        return {"name": name, "features": files[name]["features"], "captions": files[name]["captions"],
                "split": split, "languages": languages}

    return {
        "name": "synthetic-disjoint",
        "corpora": [
            entry("aligned-train", "train", [first]),
            entry("disjoint-train", "train", [second]),
            entry("aligned-val", "val", [first]),
            entry("disjoint-val", "val", [second]),
            entry("aligned-test", "test", [first, second]),
            entry("disjoint-test", "test", [second]),
        ],
        "model": model,
        "train": train,
        "pseudopairs": {
            "source_corpus": "aligned-train",
            "target_corpus": "disjoint-train",
            "source_language": first,
            "target_language": second,
        },
        "synth": synth.model_dump(mode="json"),
        "seeds": [synth.spec.seed],
        "output_dir": str(Path(output_dir) / "runs"),
    }


def synth_from_preset() -> SynthConfig:
    """Synthetic settings from the desk-scale presets of config.yaml."""
    preset = config.get_desk_preset("synthetic")
    spec = SynthSpec(**{k: v for k, v in preset.items() if k in SynthSpec.model_fields})
    splits = {k: preset[k] for k in ("val_images", "test_images") if k in preset}
    return SynthConfig(spec=spec, **splits)


class ExperimentRunner:
    """Runs the stages of one experiment and writes their artifacts under ``output_dir``."""

    def __init__(self, experiment: ExperimentConfig):
        self.experiment = experiment
        self.output_dir = Path(experiment.output_dir)
        self._corpora: Dict[str, CaptionedCorpus] = {}

    # ------------------------------------------------------------------ data

    def load(self, entry: CorpusEntry) -> CaptionedCorpus:
        """Load (once) a configured corpus, applying its language restriction and translations."""
        if entry.name not in self._corpora:
            corpus = load_corpus(entry.features, entry.captions, name=entry.name, split=entry.split,
                                 expected_dim=self.experiment.model.feature_dim)
            for translation in self.experiment.translations:
                if translation.corpus == entry.name:
                    corpus = ingest_translations(corpus, translation.path, translation.language)
            if entry.languages is not None:
                corpus = corpus.restrict_languages(entry.languages)
            self._corpora[entry.name] = corpus
        return self._corpora[entry.name]

    def corpora(self, split: str) -> List[CaptionedCorpus]:
        return [self.load(entry) for entry in self.experiment.corpora_in(split)]

    def sources(self) -> List[DatasetSource]:
        sources = []
        for entry in self.experiment.corpora_in("train"):
            corpus = self.load(entry)
            c2c = build_c2c_pairs(corpus, *entry.c2c) if entry.c2c else None
            sources.append(DatasetSource(corpus, None, c2c, tuple(entry.provenances)))
        if not sources:
            raise ConfigError("The experiment has no train corpora")
        return sources

    def evaluator(self) -> ValidationEvaluator:
        val = self.corpora("val")
        if not val:
            raise ConfigError("The experiment has no val corpora for early stopping")
        return ValidationEvaluator(val, self.experiment.train.early_stop_languages)

    def train_config(self, seed: int, **overrides) -> TrainConfig:
        return self.experiment.train.model_copy(update={"seed": seed, **overrides})

    # -------------------------------------------------------------- commands

    def synth(self, seed: Optional[int] = None) -> Dict[str, Dict[str, str]]:
        """Generate, split and write the synthetic corpora plus manifest and starter config.

        ``seed`` overrides the generator seed of the synthetic settings.
        """
        synth = self.experiment.synth or synth_from_preset()
        if seed is not None:
            synth = synth.model_copy(update={"spec": synth.spec.model_copy(update={"seed": seed})})
        aligned, disjoint = generate_synthetic(synth.spec)
        files: Dict[str, Dict[str, str]] = {}
        for corpus in (aligned, disjoint):
            parts = split_corpus(corpus, synth.val_images, synth.test_images, synth.spec.seed)
            for part in parts:
                files[part.name] = save_corpus(part, self.output_dir)

        manifest = {
            "spec": synth.spec.model_dump(mode="json"),
            "val_images": synth.val_images,
            "test_images": synth.test_images,
            "corpora": {
                name: {role: {"path": Path(p).name, "sha256": file_sha256(p)} for role, p in paths.items()}
                for name, paths in sorted(files.items())
            },
        }
        write_json(self.output_dir / "manifest.json", manifest)
        write_json(self.output_dir / "experiment.json", starter_experiment(
            {name: {role: Path(p).name for role, p in paths.items()} for name, paths in files.items()},
            synth, Path("."),
        ))
        write_run_metadata(self.output_dir, "synth")
        logger.info(f"Wrote {len(files)} corpora to {self.output_dir}")
        return files

    def train_seed(self, seed: int, directory: Path, train_config: Optional[TrainConfig] = None
                   ) -> Tuple[GroundedModel, RetrievalReport]:
        """Train one seed; writes checkpoint, TrainLog and the test report into ``directory``."""
        sources = self.sources()
        vocab = build_vocabulary([s.corpus for s in sources], self.experiment.model.min_count)
        model = GroundedModel.create(vocab, self.experiment.model, seed)
        trainer = Trainer(model, sources, train_config or self.train_config(seed), self.evaluator(),
                          checkpoint_path=directory / "model.ckpt", log_path=directory / "train_log.jsonl")
        result = trainer.train()
        save_checkpoint(directory / "model.ckpt", result.model)
        report = self.test_report(result.model)
        report.save(directory / "report.json")
        return result.model, report

    def train(self) -> List[RetrievalReport]:
        """Train every seed; multi-seed runs also write a mean report."""
        reports = []
        for seed in self.experiment.seeds:
            directory = self.output_dir / f"seed-{seed}"
            _, report = self.train_seed(seed, directory)
            reports.append(report)
            write_run_metadata(directory, "train", seed=seed)
        if len(reports) > 1:
            average_reports(reports, name=self.experiment.name).save(self.output_dir / "report-mean.json")
        return reports

    def test_report(self, model: GroundedModel, translation: bool = False) -> RetrievalReport:
        """Retrieval on all test corpora; bilingual test corpora optionally add translation retrieval."""
        test = self.corpora("test")
        if not test:
            raise ConfigError("The experiment has no test corpora")
        reports = []
        for corpus in test:
            report = evaluate_retrieval(model, corpus)
            languages = corpus.languages
            if translation and len(languages) >= 2:
                report.translation.append(corpus_translation_retrieval(model, corpus, languages[0], languages[1]))
            reports.append(report)
        return reports[0] if len(reports) == 1 else merge_reports(self.experiment.name, reports)

    def evaluate(self, checkpoint: Path) -> RetrievalReport:
        model = load_checkpoint(checkpoint, self.experiment.model.min_count)
        report = self.test_report(model, translation=True)
        report.save(self.output_dir / "eval_report.json")
        write_run_metadata(self.output_dir, "eval", checkpoint=str(checkpoint))
        return report

    def pseudopairs(self, checkpoint: Path, cycle: bool = False, reference: Optional[Path] = None) -> dict:
        """
        Generate and filter pseudopairs with a trained model; optionally run a full
        restart / fine-tune round on the augmented data.
        """
        pseudo = self.experiment.pseudopairs
        if pseudo is None:
            raise ConfigError("The experiment has no pseudopairs section")
        model = load_checkpoint(checkpoint, self.experiment.model.min_count)
        source = self.load(self.experiment.corpus(pseudo.source_corpus))
        target = self.load(self.experiment.corpus(pseudo.target_corpus))
        reference_pairs = read_pairs(reference, pseudo.source_language, pseudo.target_language) if reference else None

        outputs = {}
        if cycle:
            seed = self.experiment.seeds[0]
            directory = self.output_dir / f"cycle-{pseudo.mode}-seed-{seed}"
            result = run_pseudopair_cycle(
                model, self.sources(), source, target, pseudo, self.train_config(seed), self.evaluator(),
                reference=reference_pairs, checkpoint_path=directory / "model.ckpt",
                log_path=directory / "train_log.jsonl",
            )
            pairs, diagnostics = result.pairs, result.diagnostics
            save_checkpoint(directory / "model.ckpt", result.model)
            report = self.test_report(result.model)
            report.save(directory / "report.json")
            write_json(directory / "cycle.json", {"before_score": result.before_score,
                                                  "after_score": result.after_score,
                                                  "mode": pseudo.mode, "pairs": len(result.pairs)})
            outputs["cycle"] = str(directory)
        else:
            pairs = apply_filter(generate_pseudopairs(model, source, target, pseudo.source_language,
                                                      pseudo.target_language,
                                                      source_provenances=pseudo.source_provenances),
                                 pseudo.filter)
            diagnostics = diagnose(pairs, source, target, reference_pairs, pseudo.top_k)

        outputs["pairs"] = str(write_pairs(self.output_dir / "pseudopairs.jsonl", pairs))
        outputs["diagnostics"] = str(write_diagnostics(self.output_dir / "pseudopair_diagnostics.json", diagnostics))
        write_run_metadata(self.output_dir, "pseudopairs", checkpoint=str(checkpoint))
        logger.info(f"{len(pairs)} pseudopairs (filter {pseudo.filter}), coverage {diagnostics.coverage:.3f}")
        return outputs

    def ingest_translations(self) -> Dict[str, Dict[str, str]]:
        """Write every corpus that receives translations, translations included."""
        if not self.experiment.translations:
            raise ConfigError("The experiment has no translations section")
        written = {}
        for name in sorted({t.corpus for t in self.experiment.translations}):
            corpus = self.load(self.experiment.corpus(name))
            written[name] = save_corpus(corpus, self.output_dir)
        write_run_metadata(self.output_dir, "ingest-translations")
        return written

    def compare_losses(self) -> str:
        """Train max- and sum-violation models for every seed; returns (and writes) the CSV."""
        rows = []
        for variant in ("max-violation", "sum-violation"):
            reports = []
            for seed in self.experiment.seeds:
                loss = self.experiment.train.loss.model_copy(update={"variant": variant})
                directory = self.output_dir / variant / f"seed-{seed}"
                _, report = self.train_seed(seed, directory, self.train_config(seed, loss=loss))
                reports.append(report)
                rows.append((variant, str(seed), report))
            rows.append((variant, "mean", average_reports(reports)))
        text = reports_to_csv(rows)
        path = self.output_dir / "compare_losses.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        write_run_metadata(self.output_dir, "compare-losses")
        return text


def average_report_files(paths: Sequence[Path], name: Optional[str] = None) -> RetrievalReport:
    """Seed-average existing report JSON files."""
    if not paths:
        raise ConfigError("report needs at least one report file")
    try:
        reports = [RetrievalReport.load(p) for p in paths]
    except FileNotFoundError as e:
        raise ConfigError(f"Report file not found: {e.filename}") from e
    try:
        return average_reports(reports, name)
    except ValueError as e:
        raise ConfigError(str(e)) from e
