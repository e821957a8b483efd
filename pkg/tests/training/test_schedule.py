import pytest
import torch

from partlisten.config import TrainConfig
from partlisten.errors import InvalidConfigError
from partlisten.training.schedule import make_optimizer, make_scheduler, polynomial_lr


def test_learning_rate_reaches_zero_at_the_end():
    assert polynomial_lr(1e-3, 100, 100) == 0.0
    assert polynomial_lr(1e-3, 150, 100) == 0.0


def test_learning_rate_halfway():
    assert polynomial_lr(1e-3, 50, 100, power=0.9) == pytest.approx(5.36e-4, abs=1e-6)
    assert polynomial_lr(1e-3, 50, 100, power=0.9) == pytest.approx(1e-3 * 0.5**0.9, rel=1e-4)


def test_scheduler_follows_the_closed_form():
    model = torch.nn.Linear(2, 1)
    optimizer = make_optimizer(model, TrainConfig())
    scheduler = make_scheduler(optimizer, total_steps=10)

    rates = []
    for _ in range(10):
        optimizer.step()
        scheduler.step()
        rates.append(scheduler.get_last_lr()[0])

    expected = [polynomial_lr(1e-3, step, 10) for step in range(1, 11)]
    assert rates == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_zero_total_steps_is_rejected():
    with pytest.raises(InvalidConfigError):
        polynomial_lr(1e-3, 0, 0)


def test_zero_epochs_are_rejected():
    with pytest.raises(InvalidConfigError):
        TrainConfig(epochs=0)
