"""Checkpoint archives.

A checkpoint is a NumPy ``.npz`` archive. Every model parameter and buffer is stored
under its state-dict name as a little-endian float32 array. The key ``__meta__`` holds
UTF-8 JSON bytes (uint8 array) with the experiment config and the model sizes, so any
runtime that reads npz can rebuild the model.
"""

import json
from pathlib import Path

import numpy as np
import structlog
import torch

from ..errors import InvalidInputError

logger = structlog.get_logger()

META_KEY = "__meta__"
FLOAT = np.dtype("<f4")


def save_checkpoint(path, model, meta):
    path = Path(path)
    arrays = {
        name: tensor.detach().cpu().numpy().astype(FLOAT)
        for name, tensor in model.state_dict().items()
    }
    arrays[META_KEY] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), np.uint8)

    # np.savez appends .npz to names without it
    with path.open("wb") as handle:
        np.savez(handle, **arrays)

    logger.debug("checkpoint_saved", path=str(path), tensors=len(arrays) - 1)
    return path


def read_checkpoint(path):
    """Return (state dict of float32 tensors, meta dict)."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"Checkpoint {path} does not exist")

    with np.load(path, allow_pickle=False) as archive:
        if META_KEY not in archive.files:
            raise InvalidInputError(f"Checkpoint {path} has no metadata")

        meta = json.loads(archive[META_KEY].tobytes().decode("utf-8"))
        state = {
            name: torch.from_numpy(archive[name].astype(FLOAT).copy())
            for name in archive.files
            if name != META_KEY
        }

    return state, meta


def restore(model, state):
    """Load float32 arrays into a model, casting to each tensor's own dtype."""
    expected = model.state_dict()
    missing = set(expected) - set(state)
    unexpected = set(state) - set(expected)
    if missing or unexpected:
        raise InvalidInputError(
            f"Checkpoint does not fit the model: missing {sorted(missing)}, "
            f"unexpected {sorted(unexpected)}"
        )

    model.load_state_dict({name: state[name].to(expected[name].dtype) for name in expected})
    return model
