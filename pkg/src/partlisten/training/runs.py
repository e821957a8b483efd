import json
from pathlib import Path

import polars as pl
import structlog

from ..config import ExperimentConfig
from ..encoders.checkpoint import read_checkpoint, restore, save_checkpoint
from ..errors import InvalidInputError
from ..language.vocabulary import Vocabulary
from .listener import Listener

logger = structlog.get_logger()

CONFIG_FILE = "config.json"
VOCABULARY_FILE = "vocabulary.json"
METRICS_FILE = "metrics.jsonl"
LOG_FILE = "train.log"
MODEL_FILE = "model.ckpt"
CHECKPOINT_DIR = "checkpoints"


class RunDirectory:
    """Files of one training run."""

    def __init__(self, path):
        self.path = Path(path)

    @classmethod
    def create(cls, output_dir, run_name):
        """A fresh directory; repeated names get a numeric suffix."""
        output_dir = Path(output_dir)
        path = output_dir / run_name
        suffix = 1
        while path.exists():
            path = output_dir / f"{run_name}-{suffix}"
            suffix += 1

        (path / CHECKPOINT_DIR).mkdir(parents=True)
        logger.info("run_directory_created", path=str(path))
        return cls(path)

    @property
    def config_path(self):
        return self.path / CONFIG_FILE

    @property
    def vocabulary_path(self):
        return self.path / VOCABULARY_FILE

    @property
    def metrics_path(self):
        return self.path / METRICS_FILE

    @property
    def log_path(self):
        return self.path / LOG_FILE

    @property
    def model_path(self):
        return self.path / MODEL_FILE

    def checkpoint_path(self, epoch):
        return self.path / CHECKPOINT_DIR / f"epoch_{epoch:03d}.ckpt"

    def append_metrics(self, record):
        with self.metrics_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")

    def read_metrics(self):
        if not self.metrics_path.exists() or self.metrics_path.stat().st_size == 0:
            return pl.DataFrame()
        return pl.read_ndjson(self.metrics_path)

    def load_config(self):
        if not self.config_path.exists():
            raise InvalidInputError(f"{self.path} is not a run directory")
        return ExperimentConfig.load(self.config_path)


def build_listener(config, vocab_size, part_names, category=None):
    train = config.train
    return Listener(
        vocab_size,
        part_names,
        config.encoder,
        mode=train.mode,
        softmax_mode=train.softmax_mode,
        normalize=not train.no_normalization,
        with_global_feature=train.with_global_feature,
        category=category or config.category,
    )


def save_listener(path, model, config, epoch):
    meta = {
        "config": config.to_dict(),
        "vocab_size": model.classification_encoder.embedding.num_embeddings,
        "part_names": list(model.part_names),
        "category": model.category,
        "epoch": epoch,
    }
    return save_checkpoint(path, model, meta)


def _find_vocabulary(checkpoint_path):
    for directory in (checkpoint_path.parent, checkpoint_path.parent.parent):
        if (directory / VOCABULARY_FILE).exists():
            return directory / VOCABULARY_FILE

    raise InvalidInputError(f"No {VOCABULARY_FILE} next to {checkpoint_path}")


def load_checkpoint(path, vocabulary_path=None):
    """(listener in eval mode, ExperimentConfig, Vocabulary) from a checkpoint archive.

    A run directory stands for its final model.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MODEL_FILE

    state, meta = read_checkpoint(path)
    config = ExperimentConfig.from_dict(meta["config"])
    vocabulary = Vocabulary.load(vocabulary_path or _find_vocabulary(path))
    if len(vocabulary) != meta["vocab_size"]:
        raise InvalidInputError(
            f"Vocabulary has {len(vocabulary)} tokens, the checkpoint expects {meta['vocab_size']}"
        )

    model = build_listener(config, meta["vocab_size"], meta["part_names"], meta["category"])
    restore(model, state)
    model.eval()

    logger.info("checkpoint_loaded", path=str(path), epoch=meta["epoch"], mode=model.mode)
    return model, config, vocabulary
