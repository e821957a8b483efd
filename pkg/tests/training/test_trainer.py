import dataclasses

import pytest
import torch

from partlisten.config import LossConfig
from partlisten.encoders.checkpoint import read_checkpoint
from partlisten.errors import InvalidConfigError, InvalidInputError, TrainingDivergedError
from partlisten.language.rounds import Utterance
from partlisten.training import trainer
from partlisten.training.batching import ShapeStore
from partlisten.training.runs import RunDirectory, build_listener
from partlisten.training.schedule import make_optimizer
from partlisten.training.trainer import Trainer, few_shot_step, pick_few_shot_shapes
from tests.factories import make_shape, small_config


def train(tmp_path, data, config, name="run"):
    return Trainer(config, data, RunDirectory.create(tmp_path, name)).train()


def test_training_writes_metrics_and_checkpoints(tmp_path, chair_data):
    result = train(tmp_path, chair_data, small_config())
    run = RunDirectory(tmp_path / "run")

    metrics = run.read_metrics()
    assert metrics["epoch"].to_list() == [1, 2]
    assert {"loss", "classification_loss", "ce_reg_loss", "lr", "train_accuracy"} <= set(
        metrics.columns
    )
    assert metrics["lr"][-1] == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= metrics["val_miou"][-1] <= 1.0
    assert result.checkpoint == run.model_path
    assert sorted(p.name for p in run.path.joinpath("checkpoints").iterdir()) == [
        "epoch_000.ckpt",
        "epoch_001.ckpt",
        "epoch_002.ckpt",
    ]


def test_training_is_reproducible(tmp_path, chair_data):
    first = train(tmp_path, chair_data, small_config(), "first")
    second = train(tmp_path, chair_data, small_config(), "second")

    for a, b in zip(first.history, second.history, strict=True):
        assert a.keys() == b.keys()
        for key, value in a.items():
            assert b[key] == pytest.approx(value, rel=1e-6, abs=1e-9)


def test_part_agnostic_training_has_no_ce_regularization(tmp_path, chair_data):
    result = train(tmp_path, chair_data, small_config(mode="pn_agnostic"))

    assert "ce_reg_loss" not in result.history[-1]
    assert result.model.mode == "pn_agnostic"


def test_no_ce_reg_ablation(tmp_path, chair_data):
    result = train(tmp_path, chair_data, small_config().ablate("no_ce_reg"))

    assert "ce_reg_loss" not in result.history[-1]


def test_coseg_loss_is_tracked(tmp_path, chair_data):
    result = train(tmp_path, chair_data, small_config(loss=LossConfig(enable_coseg=True)))

    assert "coseg_loss" in result.history[-1]


def test_coseg_is_disabled_without_part_queries(tmp_path, chair_data, mocker):
    warning = mocker.patch.object(trainer.logger, "warning")
    config = small_config(loss=LossConfig(enable_coseg=True), mode="pn_agnostic")

    runner = Trainer(config, chair_data, RunDirectory.create(tmp_path, "run"))

    assert not runner.use_coseg
    warning.assert_called_once()


def test_diverging_loss_restores_the_last_checkpoint(tmp_path, chair_data, mocker):
    runner = Trainer(small_config(), chair_data, RunDirectory.create(tmp_path, "run"))
    initial = {name: t.clone() for name, t in runner.model.state_dict().items()}

    def nan_loss(logits, targets, smoothing=0.0):
        return (logits * float("nan")).sum()

    mocker.patch.object(trainer, "classification_loss", side_effect=nan_loss)

    with pytest.raises(TrainingDivergedError) as error:
        runner.train()

    assert error.value.checkpoint == runner.run.checkpoint_path(0)
    for name, tensor in runner.model.state_dict().items():
        assert torch.equal(tensor, initial[name].to(tensor.dtype))


def test_few_shot_refinement_runs_each_epoch(tmp_path, chair_data):
    config = dataclasses.replace(small_config(), few_shot_shapes=2, few_shot_steps=2)

    result = train(tmp_path, chair_data, config)

    assert all("few_shot_loss" in record for record in result.history)


def test_few_shot_needs_part_queries(tmp_path, chair_data):
    config = dataclasses.replace(small_config(mode="pn_agnostic"), few_shot_shapes=2)

    with pytest.raises(InvalidConfigError):
        Trainer(config, chair_data, RunDirectory.create(tmp_path, "run"))


def test_rounds_without_a_part_are_not_trained_on(tmp_path, chair_data):
    splits = {
        name: [r.with_utterance(Utterance(r.utterance.raw, r.utterance.words)) for r in rounds]
        for name, rounds in chair_data.splits.items()
    }

    with pytest.raises(InvalidInputError):
        Trainer(small_config(), chair_data._replace(splits=splits), RunDirectory(tmp_path))


def test_pick_few_shot_shapes_is_deterministic(chairs):
    picked = pick_few_shot_shapes(chairs, 3, seed=1)

    assert [s.id for s in picked] == [s.id for s in pick_few_shot_shapes(chairs, 3, seed=1)]
    assert len({s.id for s in picked}) == 3
    with pytest.raises(InvalidConfigError):
        pick_few_shot_shapes(chairs, len(chairs) + 1)


def test_few_shot_step_lowers_the_segment_loss():
    shapes = [
        make_shape(name, [0, 0, 1, 1, 2, 2], labels=[0, 0, 1, 1, 1, 0], seed=i)
        for i, name in enumerate("abc")
    ]
    store = ShapeStore(shapes)
    config = small_config()
    torch.manual_seed(0)
    model = build_listener(config, 8, ("back", "seat"))
    optimizer = make_optimizer(model, dataclasses.replace(config.train, lr=1e-2))

    losses = [few_shot_step(model, shapes, optimizer, store) for _ in range(30)]

    assert losses[-1] < losses[0]


def test_few_shot_step_needs_labels():
    shapes = [make_shape("a", [0, 1])]
    config = small_config()
    model = build_listener(config, 8, ("back", "seat"))

    with pytest.raises(InvalidInputError):
        few_shot_step(model, shapes, make_optimizer(model, config.train), ShapeStore(shapes))


def test_final_model_matches_the_last_epoch(tmp_path, chair_data):
    result = train(tmp_path, chair_data, small_config())

    final, meta = read_checkpoint(result.checkpoint)
    last, _ = read_checkpoint(RunDirectory(tmp_path / "run").checkpoint_path(2))

    assert meta["epoch"] == 2
    for name, tensor in final.items():
        assert torch.equal(tensor, last[name])
