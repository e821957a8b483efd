import dataclasses
import json
import os
from pathlib import Path
from typing import ClassVar

import dotenv

from .errors import InvalidConfigError

ENV_FILE = "conf/partlisten.env"
DATA_ROOT_VARIABLE = "PARTGLOT_DATA"
FALLBACK_DATA_ROOT_VARIABLE = "PARTLISTEN_DATA"

MODES = ("pn_agnostic", "pn_aware")
INPUT_MODES = ("super_segments", "raw_points")
SOFTMAX_MODES = ("pn_then_ss", "ss_only", "pn_only", "ss_then_pn")
BASELINES = ("none", "uniform", "random")
IOU_AVERAGE_SETS = ("all", "present")


def load_environment():
    dotenv.load_dotenv(ENV_FILE)


def data_root():
    root = os.getenv(DATA_ROOT_VARIABLE) or os.getenv(FALLBACK_DATA_ROOT_VARIABLE) or "data"
    return Path(root)


def resolve_data_path(path):
    """Relative paths that do not exist from the working directory are looked up
    under the data root."""
    if path is None:
        return None

    path = Path(path)
    if path.is_absolute() or path.exists():
        return path

    return data_root() / path


def _require(condition, message):
    if not condition:
        raise InvalidConfigError(message)


@dataclasses.dataclass
class EncoderConfig:
    word_embedding_dim: int = 100
    lstm_hidden_dim: int = 64
    segment_feature_dim: int = 64
    segment_layers: int = 2
    attention_dim: int = 64
    part_embedding_dim: int = 64
    classification_dim: int = 64
    head_hidden_dim: int = 64

    def __post_init__(self):
        for field in dataclasses.fields(self):
            _require(getattr(self, field.name) >= 1, f"{field.name} must be >= 1")


@dataclasses.dataclass
class LossConfig:
    ce_weight: float = 1e-2
    coseg_weight: float = 1e-2
    label_smoothing: float = 0.1
    enable_ce_reg: bool = True
    enable_coseg: bool = False

    def __post_init__(self):
        _require(self.ce_weight >= 0, "ce_weight must be >= 0")
        _require(self.coseg_weight >= 0, "coseg_weight must be >= 0")
        _require(0 <= self.label_smoothing < 1, "label_smoothing must be in [0, 1)")


@dataclasses.dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    optimizer: str = "adam"
    lr: float = 1e-3
    lr_power: float = 0.9
    seed: int = 0
    mode: str = "pn_aware"
    input_mode: str = "super_segments"
    softmax_mode: str = "pn_then_ss"
    no_normalization: bool = False
    with_global_feature: bool = False
    no_ce_reg: bool = False
    balanced_sampling: bool = True
    data_fraction: float = 1.0
    max_utterance_length: int = 33
    min_count: int = 1

    def __post_init__(self):
        _require(self.epochs >= 1, "epochs must be >= 1")
        _require(self.batch_size >= 1, "batch_size must be >= 1")
        _require(self.optimizer == "adam", "only the adam optimizer is supported")
        _require(self.lr > 0, "lr must be > 0")
        _require(self.mode in MODES, f"mode must be one of {MODES}")
        _require(self.input_mode in INPUT_MODES, f"input_mode must be one of {INPUT_MODES}")
        _require(
            self.softmax_mode in SOFTMAX_MODES, f"softmax_mode must be one of {SOFTMAX_MODES}"
        )
        _require(0 < self.data_fraction <= 1, "data_fraction must be in (0, 1]")
        _require(self.max_utterance_length >= 1, "max_utterance_length must be >= 1")


@dataclasses.dataclass
class EvalConfig:
    mode: str | None = None
    baseline: str = "none"
    iou_average_set: str = "all"
    category: str = "chair"
    ood_part_map: dict = dataclasses.field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        _require(self.mode is None or self.mode in MODES, f"eval mode must be one of {MODES}")
        _require(self.baseline in BASELINES, f"baseline must be one of {BASELINES}")
        _require(
            self.iou_average_set in IOU_AVERAGE_SETS,
            f"iou_average_set must be one of {IOU_AVERAGE_SETS}",
        )


# Ablation name -> (section, field, value)
ABLATIONS = {
    "no_normalization": ("train", "no_normalization", True),
    "with_global_feature": ("train", "with_global_feature", True),
    "no_ce_reg": ("train", "no_ce_reg", True),
    "raw_points": ("train", "input_mode", "raw_points"),
    "ss_only": ("train", "softmax_mode", "ss_only"),
    "pn_only": ("train", "softmax_mode", "pn_only"),
    "ss_then_pn": ("train", "softmax_mode", "ss_then_pn"),
    "pn_agnostic": ("train", "mode", "pn_agnostic"),
    "coseg": ("loss", "enable_coseg", True),
}


@dataclasses.dataclass
class ExperimentConfig:
    run_name: str = "default"
    bundle: str = "bundle"
    splits: str = "prepared"
    output_dir: str = "runs"
    category: str = "chair"
    granularity: int | None = None
    few_shot_shapes: int = 0
    few_shot_steps: int = 1
    encoder: EncoderConfig = dataclasses.field(default_factory=EncoderConfig)
    loss: LossConfig = dataclasses.field(default_factory=LossConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    eval: EvalConfig = dataclasses.field(default_factory=EvalConfig)

    SECTIONS: ClassVar[dict] = {
        "encoder": EncoderConfig,
        "loss": LossConfig,
        "train": TrainConfig,
        "eval": EvalConfig,
    }

    def __post_init__(self):
        _require(self.granularity is None or self.granularity >= 1, "granularity must be >= 1")
        _require(self.few_shot_shapes >= 0, "few_shot_shapes must be >= 0")
        _require(self.few_shot_steps >= 1, "few_shot_steps must be >= 1")

    @property
    def eval_mode(self):
        return self.eval.mode or self.train.mode

    def ablate(self, name):
        if name not in ABLATIONS:
            raise InvalidConfigError(
                f"Unknown ablation '{name}'. Choose from {sorted(ABLATIONS)}."
            )

        section, field, value = ABLATIONS[name]
        updated = dataclasses.replace(getattr(self, section), **{field: value})
        return dataclasses.replace(self, **{section: updated})

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"Unknown config keys: {sorted(unknown)}")

        for name, section_cls in cls.SECTIONS.items():
            if name in data:
                data[name] = _section_from_dict(section_cls, data[name], name)

        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"Config is not valid JSON: {exc}") from exc

        if not isinstance(data, dict):
            raise InvalidConfigError("Config must be a JSON object")

        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidConfigError(f"Cannot read config {path}: {exc}") from exc

        return cls.from_json(text)

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")


def _section_from_dict(section_cls, values, name):
    if isinstance(values, section_cls):
        return values

    if not isinstance(values, dict):
        raise InvalidConfigError(f"Config section '{name}' must be an object")

    known = {field.name for field in dataclasses.fields(section_cls)}
    unknown = set(values) - known
    if unknown:
        raise InvalidConfigError(f"Unknown keys in '{name}': {sorted(unknown)}")

    return section_cls(**values)
