import torch

from ..errors import InvalidConfigError


def polynomial_lr(lr0, step, total_steps, power=0.9):
    """lr0 * (1 - step / total_steps) ** power, zero from total_steps on."""
    if total_steps < 1:
        raise InvalidConfigError("total_steps must be >= 1")

    return lr0 * (1.0 - min(step, total_steps) / total_steps) ** power


def make_optimizer(model, config):
    if config.optimizer != "adam":
        raise InvalidConfigError(f"Unsupported optimizer '{config.optimizer}'")

    return torch.optim.Adam(model.parameters(), lr=config.lr)


def make_scheduler(optimizer, total_steps, power=0.9):
    """Stepped once per optimizer step; follows polynomial_lr."""
    return torch.optim.lr_scheduler.PolynomialLR(optimizer, total_iters=total_steps, power=power)
