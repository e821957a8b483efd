import collections
from typing import NamedTuple

import numpy as np
import structlog
import torch
from torch.utils.data import DataLoader, RandomSampler, WeightedRandomSampler

from ..attention.segmentation import majority_vote
from ..encoders.checkpoint import read_checkpoint, restore
from ..errors import InvalidConfigError, InvalidInputError, TrainingDivergedError
from ..evaluation.evaluator import Evaluator, classification_accuracy
from ..language.rounds import balanced_weights
from .batching import RoundCollator, ShapeStore, subsample_rounds
from .listener import PN_AWARE
from .losses import (
    ce_regularization,
    classification_loss,
    few_shot_loss,
    group_consistency_loss,
)
from .runs import build_listener, save_listener
from .schedule import make_optimizer, make_scheduler

logger = structlog.get_logger()


class TrainingResult(NamedTuple):
    model: torch.nn.Module
    history: list
    checkpoint: object


def rounds_with_part(rounds):
    """Rounds whose utterance mentions exactly one known part."""
    kept = [r for r in rounds if r.mentioned_part is not None]
    if len(kept) < len(rounds):
        logger.info("rounds_without_part_dropped", dropped=len(rounds) - len(kept))
    return kept


def pick_few_shot_shapes(shapes, count, seed=0):
    """Deterministic choice of annotated shapes, by sorted id."""
    labelled = sorted((s for s in shapes if s.gt is not None), key=lambda shape: shape.id)
    if count > len(labelled):
        raise InvalidConfigError(f"{count} few-shot shapes requested, {len(labelled)} available")

    chosen = np.random.default_rng(seed).choice(len(labelled), size=count, replace=False)
    return [labelled[i] for i in sorted(chosen)]


def few_shot_step(model, shapes, optimizer, store):
    """One optimizer step of per-segment cross entropy on annotated shapes."""
    if not shapes:
        raise InvalidInputError("Few-shot refinement needs at least one annotated shape")
    if any(shape.gt is None for shape in shapes):
        raise InvalidInputError("Few-shot shapes need ground-truth labels")
    if not model.is_part_aware:
        raise InvalidConfigError("Few-shot refinement needs a part-aware listener")

    model.train()
    features = model.segment_encoder(store.collate([shape.id for shape in shapes]))
    rows, _ = model.part_attention(features)

    targets = torch.zeros(features.mask.shape, dtype=torch.long)
    for index, shape in enumerate(shapes):
        segments = store.segments_for(shape.id)
        parts = majority_vote(
            segments.assignment, shape.gt.labels, segments.num_segments, model.num_parts
        )
        targets[index, : len(parts)] = torch.from_numpy(parts)

    loss = few_shot_loss(rows, targets, features.mask)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()

    return float(loss)


class Trainer:
    """Listener training on reference games with polynomial LR decay.

    Every epoch ends with optional few-shot steps, validation and a checkpoint;
    metrics go to the run's metrics.jsonl.
    """

    def __init__(self, config, data, run):
        self.config = config
        self.data = data
        self.run = run
        train = config.train

        torch.manual_seed(train.seed)
        torch.use_deterministic_algorithms(True, warn_only=True)

        self.store = ShapeStore(data.shapes, train.input_mode)
        self.model = build_listener(
            config, len(data.vocabulary), data.part_names.names, data.category
        )
        self.optimizer = make_optimizer(self.model, train)

        rounds = rounds_with_part(data.splits["train"])
        self.train_rounds = subsample_rounds(rounds, train.data_fraction, train.seed)
        self.val_rounds = rounds_with_part(data.splits["val"])
        if not self.train_rounds:
            raise InvalidInputError("No training rounds mention a part")

        self.loader = self.make_loader()
        self.scheduler = make_scheduler(
            self.optimizer, train.epochs * len(self.loader), train.lr_power
        )

        self.use_ce_reg = (
            train.mode == PN_AWARE and config.loss.enable_ce_reg and not train.no_ce_reg
        )
        self.use_coseg = config.loss.enable_coseg
        if self.use_coseg and train.mode != PN_AWARE:
            logger.warning("coseg_needs_part_aware", mode=train.mode)
            self.use_coseg = False

        self.few_shot = []
        if config.few_shot_shapes:
            if train.mode != PN_AWARE:
                raise InvalidConfigError("Few-shot refinement needs mode pn_aware")
            candidates = data.shapes_in("train")
            self.few_shot = pick_few_shot_shapes(candidates, config.few_shot_shapes, train.seed)

        self.last_checkpoint = None

    def make_loader(self):
        train = self.config.train
        generator = torch.Generator().manual_seed(train.seed)

        if train.balanced_sampling:
            weights = balanced_weights(self.train_rounds, self.data.part_names)
            sampler = WeightedRandomSampler(
                weights.tolist(), len(self.train_rounds), replacement=True, generator=generator
            )
        else:
            sampler = RandomSampler(self.train_rounds, generator=generator)

        collator = RoundCollator(self.store, self.data.vocabulary, train.max_utterance_length)
        return DataLoader(
            self.train_rounds, batch_size=train.batch_size, sampler=sampler, collate_fn=collator
        )

    def compute_loss(self, batch):
        loss_config = self.config.loss
        output = self.model(batch)
        losses = {
            "classification": classification_loss(
                output.logits, batch.targets, loss_config.label_smoothing
            )
        }
        total = losses["classification"]

        if self.use_ce_reg:
            losses["ce_reg"] = ce_regularization(output.rows, output.features.mask)
            total = total + loss_config.ce_weight * losses["ce_reg"]

        if self.use_coseg:
            mask = output.features.mask
            parts = output.rows.detach().argmax(dim=-1)[mask]
            losses["coseg"] = group_consistency_loss(output.features.descriptors[mask], parts)
            total = total + loss_config.coseg_weight * losses["coseg"]

        return total, losses, output

    def train(self):
        train = self.config.train
        logger.info(
            "training_start",
            rounds=len(self.train_rounds),
            batches=len(self.loader),
            epochs=train.epochs,
            mode=train.mode,
        )

        self.last_checkpoint = self.save(0)
        history = []
        for epoch in range(1, train.epochs + 1):
            record = self.train_epoch(epoch)

            for _ in range(self.config.few_shot_steps if self.few_shot else 0):
                record["few_shot_loss"] = few_shot_step(
                    self.model, self.few_shot, self.optimizer, self.store
                )

            record.update(self.validate())
            self.last_checkpoint = self.save(epoch)
            self.run.append_metrics(record)
            history.append(record)
            logger.info("epoch_done", **record)

        save_listener(self.run.model_path, self.model, self.config, train.epochs)
        logger.info("training_done", checkpoint=str(self.run.model_path))
        return TrainingResult(self.model, history, self.run.model_path)

    def train_epoch(self, epoch):
        self.model.train()
        sums = collections.Counter()
        correct = seen = 0

        for step, batch in enumerate(self.loader):
            total, losses, output = self.compute_loss(batch)
            if not torch.isfinite(total):
                self.diverged(epoch, step)

            self.optimizer.zero_grad()
            total.backward()
            self.optimizer.step()
            self.scheduler.step()

            size = len(batch)
            sums["loss"] += float(total) * size
            for name, value in losses.items():
                sums[f"{name}_loss"] += float(value) * size
            correct += int((output.logits.argmax(dim=1) == batch.targets).sum())
            seen += size

        record = {"epoch": epoch, "lr": self.scheduler.get_last_lr()[0]}
        record.update({name: value / seen for name, value in sorted(sums.items())})
        record["train_accuracy"] = correct / seen
        return record

    def diverged(self, epoch, step):
        logger.error(
            "training_diverged", epoch=epoch, step=step, checkpoint=str(self.last_checkpoint)
        )
        if self.last_checkpoint is not None:
            state, _ = read_checkpoint(self.last_checkpoint)
            restore(self.model, state)

        raise TrainingDivergedError(
            f"Loss is not finite at epoch {epoch}, step {step}", checkpoint=self.last_checkpoint
        )

    def validate(self):
        evaluator = Evaluator(
            self.model,
            self.store,
            self.data.vocabulary,
            batch_size=self.config.train.batch_size,
            iou_average_set=self.config.eval.iou_average_set,
            max_length=self.config.train.max_utterance_length,
        )

        accuracy = classification_accuracy(evaluator, self.val_rounds)
        miou = None
        labelled = [s for s in self.data.shapes_in("val") if s.gt is not None]
        if labelled:
            miou = evaluator.segmentation_report(labelled).average_miou

        return {
            "val_accuracy": None if np.isnan(accuracy) else accuracy,
            "val_miou": miou,
        }

    def save(self, epoch):
        return save_listener(self.run.checkpoint_path(epoch), self.model, self.config, epoch)
