"""Elementwise activations and batch normalization with their derivatives."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


def sigmoid(u: np.ndarray) -> np.ndarray:
    return expit(u)


def silu(u: np.ndarray) -> np.ndarray:
    """SiLU(u) = u * sigmoid(u)."""
    return u * expit(u)


def silu_grad(u: np.ndarray) -> np.ndarray:
    """d SiLU / du = s * (1 + u * (1 - s)) with s = sigmoid(u)."""
    s = expit(u)
    return s * (1.0 + u * (1.0 - s))


@dataclass
class BatchNormCache:
    """Saved tensors of a train-mode batch-norm call."""

    xhat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray
    batch_mean: np.ndarray
    batch_var: np.ndarray  # biased


def batch_norm(
    h: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float,
    train: bool,
) -> tuple[np.ndarray, BatchNormCache | None]:
    """
    Normalize rows of `h` per feature column.

    Train mode uses batch statistics and returns a cache; eval mode uses the
    running statistics and returns no cache. Running statistics are never
    updated here.
    """
    if train:
        mean = h.mean(axis=0)
        var = h.var(axis=0)
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (h - mean) * inv_std
    out = gamma * xhat + beta
    if not train:
        return out, None
    return out, BatchNormCache(xhat, inv_std, gamma, mean, var)


def batch_norm_backward(
    dout: np.ndarray, cache: BatchNormCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reverse of a train-mode batch norm.

    Returns:
        (d input, d gamma, d beta)
    """
    rows = dout.shape[0]
    dgamma = (dout * cache.xhat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dxhat = dout * cache.gamma
    dh = (cache.inv_std / rows) * (
        rows * dxhat - dxhat.sum(axis=0) - cache.xhat * (dxhat * cache.xhat).sum(axis=0)
    )
    return dh, dgamma, dbeta
