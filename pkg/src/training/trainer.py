"""Multi-task training loop with validation-driven early stopping."""
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..autograd import Tape
from ..data.sampling import CAPTION_CAPTION, IMAGE_CAPTION, Batch, BatchSampler, DatasetSource
from ..model.checkpoint import save_checkpoint
from ..model.encoders import GroundedModel, ModelParams, encode_images, encode_sentences
from ..model.losses import LossConfig, c2c_loss, pair_loss
from ..utils.errors import NumericalError
from ..utils.logging import get_logger
from .optim import Gradients, OptimizerState, adam_step, clip_gradients, global_norm

logger = get_logger("training.trainer")

Evaluator = Callable[[GroundedModel], float]


class TrainConfig(BaseModel):
    """Optimization and early-stopping settings."""
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=128, ge=2)
    learning_rate: float = Field(default=2e-4, gt=0)
    grad_clip_norm: float = Field(default=2.0, gt=0)
    eval_interval_updates: int = Field(default=500, gt=0)
    patience_inspections: int = Field(default=10, ge=1)
    max_updates: int = Field(default=50_000, gt=0)
    seed: int = 0
    loss: LossConfig = Field(default_factory=LossConfig)
    c2c: bool = True
    early_stop_languages: Optional[List[str]] = None
    initial_inspection: bool = False


@dataclass
class Inspection:
    update: int
    score: float
    best_score: float
    improved: bool

    def to_dict(self) -> dict:
        return {"update": self.update, "score": self.score, "best_score": self.best_score,
                "improved": self.improved}


@dataclass
class TrainLog:
    """Inspection history of one training run.

    Attributes:
        inspections: Validation inspections in order
        best_score: Max score over inspections so far
        best_update: Update count of the best inspection
        best_checkpoint: Where the best parameters were written, if anywhere
        updates: Updates performed
        task_counts: Updates per task
        max_post_clip_norm: Largest gradient norm after clipping
        stop_reason: patience, max_updates or divergence
    """
    inspections: List[Inspection] = field(default_factory=list)
    best_score: float = float("-inf")
    best_update: int = 0
    best_checkpoint: Optional[str] = None
    updates: int = 0
    task_counts: Dict[str, int] = field(default_factory=lambda: {IMAGE_CAPTION: 0, CAPTION_CAPTION: 0})
    max_post_clip_norm: float = 0.0
    stop_reason: str = ""

    @property
    def initial_score(self) -> Optional[float]:
        if self.inspections and self.inspections[0].update == 0:
            return self.inspections[0].score
        return None

    def summary(self) -> dict:
        return {
            "best_score": self.best_score,
            "best_update": self.best_update,
            "best_checkpoint": self.best_checkpoint,
            "updates": self.updates,
            "inspections": len(self.inspections),
            "task_counts": dict(self.task_counts),
            "max_post_clip_norm": self.max_post_clip_norm,
            "stop_reason": self.stop_reason,
        }

    def write(self, path: Path) -> Path:
        """One JSON line per inspection followed by a summary line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for inspection in self.inspections:
                f.write(json.dumps(inspection.to_dict(), sort_keys=True) + "\n")
            f.write(json.dumps({"summary": self.summary()}, sort_keys=True) + "\n")
        return path


@dataclass
class TrainResult:
    model: GroundedModel
    log: TrainLog
    optimizer: OptimizerState


def _named_grads(params: ModelParams, by_tensor: Dict) -> Gradients:
    grads = {}
    for name, tensor in params.named():
        if tensor in by_tensor:
            grads[name] = by_tensor[tensor]
    return grads


class Trainer:
    """
    Adam with global-norm clipping over interleaved image–caption and
    caption–caption batches.

    Every ``eval_interval_updates`` updates the evaluator scores the current
    model; training stops after ``patience_inspections`` consecutive
    inspections without a new best, or at ``max_updates``. The returned model
    is the snapshot of the best inspection.
    """

    def __init__(
        self,
        model: GroundedModel,
        sources: Sequence[DatasetSource],
        config: TrainConfig,
        evaluator: Evaluator,
        checkpoint_path: Optional[Path] = None,
        log_path: Optional[Path] = None
    ):
        self.model = model
        self.config = config
        self.evaluator = evaluator
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.log_path = Path(log_path) if log_path else None
        if not config.c2c:
            sources = [replace(s, c2c=None) for s in sources]
        self.sources = list(sources)
        self.rng = np.random.default_rng(config.seed)
        self.sampler = BatchSampler(self.sources, config.batch_size, model.vocab, self.rng)
        self.optimizer = OptimizerState.zeros_like(model.params)
        self.log = TrainLog()
        self._best: Optional[ModelParams] = None

    def batch_loss(self, batch: Batch):
        """Loss of one batch, recorded on the active tape."""
        params, vocab = self.model.params, self.model.vocab
        if batch.task == CAPTION_CAPTION:
            first = encode_sentences(params, vocab, batch.token_ids, batch.lengths)
            second = encode_sentences(params, vocab, batch.token_ids_2, batch.lengths_2)
            return c2c_loss(first, second, self.config.loss)
        images = encode_images(params, batch.images)
        captions = encode_sentences(params, vocab, batch.token_ids, batch.lengths)
        return pair_loss(images, captions, self.config.loss)

    def step(self, batch: Batch) -> float:
        """One optimizer update; returns the batch loss."""
        with Tape() as tape:
            loss = self.batch_loss(batch)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError("Non-finite loss", {"update": self.log.updates + 1, "task": batch.task})
        grads = _named_grads(self.model.params, tape.backward(loss))
        clip_gradients(grads, self.config.grad_clip_norm)
        self.log.max_post_clip_norm = max(self.log.max_post_clip_norm, global_norm(grads))
        adam_step(self.model.params, grads, self.optimizer, self.config.learning_rate)
        if not self.model.params.all_finite():
            raise NumericalError("Non-finite parameters after update", {"update": self.log.updates + 1})
        self.log.updates += 1
        self.log.task_counts[batch.task] += 1
        return value

    def inspect(self) -> bool:
        """Score the current model; returns True on a new best."""
        score = float(self.evaluator(self.model))
        improved = score > self.log.best_score
        if improved:
            self.log.best_score = score
            self.log.best_update = self.log.updates
            self._best = self.model.params.copy()
            if self.checkpoint_path:
                save_checkpoint(self.checkpoint_path, self.model)
                self.log.best_checkpoint = str(self.checkpoint_path)
        self.log.inspections.append(Inspection(self.log.updates, score, self.log.best_score, improved))
        logger.info(
            f"Inspection {len(self.log.inspections)} at update {self.log.updates}: "
            f"score {score:.2f} (best {self.log.best_score:.2f})"
        )
        return improved

    def _best_model(self) -> GroundedModel:
        params = self._best if self._best is not None else self.model.params.copy()
        return GroundedModel(self.model.vocab, params, self.model.config)

    def train(self) -> TrainResult:
        """
        Run until early stopping or the update cap.

        Raises:
            NumericalError: the loss or gradients diverged; the best checkpoint
                written so far is kept
        """
        config = self.config
        failures = 0
        if config.initial_inspection:
            self.inspect()

        try:
            while self.log.updates < config.max_updates:
                self.step(self.sampler.sample())
                at_interval = self.log.updates % config.eval_interval_updates == 0
                if at_interval or self.log.updates == config.max_updates:
                    failures = 0 if self.inspect() else failures + 1
                    if failures >= config.patience_inspections:
                        self.log.stop_reason = "patience"
                        break
            else:
                self.log.stop_reason = "max_updates"
        except NumericalError:
            self.log.stop_reason = "divergence"
            if self.log_path:
                self.log.write(self.log_path)
            logger.error(f"Training diverged after {self.log.updates} updates; best score {self.log.best_score:.2f}")
            raise

        logger.info(
            f"Stopped ({self.log.stop_reason}) after {self.log.updates} updates; "
            f"best {self.log.best_score:.2f} at update {self.log.best_update}; tasks {self.log.task_counts}"
        )
        if self.log_path:
            self.log.write(self.log_path)
        return TrainResult(self._best_model(), self.log, self.optimizer)


def train(
    model: GroundedModel,
    sources: Sequence[DatasetSource],
    config: TrainConfig,
    evaluator: Evaluator,
    checkpoint_path: Optional[Path] = None,
    log_path: Optional[Path] = None
) -> TrainResult:
    """Train ``model`` in place and return the best snapshot with its log."""
    return Trainer(model, sources, config, evaluator, checkpoint_path, log_path).train()
