import torch

EPS = 1e-12


def unit_norm(x, eps=EPS):
    """Scale the last dimension to unit L2 norm. eps keeps zero vectors finite."""
    return x / (torch.linalg.vector_norm(x, dim=-1, keepdim=True) + eps)


def masked_softmax(logits, mask=None, dim=-1):
    """Softmax over dim with masked-out entries at exactly 0."""
    if mask is None:
        return torch.softmax(logits, dim=dim)

    filled = logits.masked_fill(~mask, float("-inf"))
    return torch.softmax(filled, dim=dim).masked_fill(~mask, 0.0)
