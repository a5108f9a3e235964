"""Dense, batch-norm, activation, softmax, and cross-entropy primitives.

All forwards return (output, cache); backwards take the cache and the
upstream gradient and return (input gradient, parameter gradients).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

LOG_CLAMP = 1e-12  # floor on probabilities before the log in cross-entropy


@dataclass
class DenseParams:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ContractError(
                f"dense shapes inconsistent: W {self.W.shape}, b {self.b.shape}"
            )

    def tensors(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}


def init_dense(in_dim: int, out_dim: int, rng, dtype=np.float32) -> DenseParams:
    lim = np.sqrt(6.0 / (in_dim + out_dim))
    return DenseParams(
        W=rng.uniform(-lim, lim, size=(out_dim, in_dim)).astype(dtype),
        b=np.zeros(out_dim, dtype=dtype),
    )


def dense_forward(x, p: DenseParams):
    x = np.asarray(x)
    if x.shape[-1] != p.W.shape[1]:
        raise ContractError(
            f"dense input dim {x.shape[-1]} does not match W {p.W.shape}"
        )
    return x @ p.W.T + p.b, {"x": x}


def dense_backward(cache, p: DenseParams, dy):
    x = cache["x"]
    dx = dy @ p.W
    return dx, {"W": dy.T @ x, "b": dy.sum(axis=0)}


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9  # retention factor of the old running statistic
    epsilon: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.momentum < 1.0:
            raise ContractError(f"momentum must be in (0, 1): {self.momentum}")
        if np.any(self.running_var < 0):
            raise ContractError("running_var must be non-negative")

    def tensors(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }


def init_batchnorm(dim: int, dtype=np.float32, momentum: float = 0.9) -> BatchNormParams:
    return BatchNormParams(
        gamma=np.ones(dim, dtype=dtype),
        beta=np.zeros(dim, dtype=dtype),
        running_mean=np.zeros(dim, dtype=dtype),
        running_var=np.ones(dim, dtype=dtype),
        momentum=momentum,
    )


def batchnorm_forward(x, p: BatchNormParams, mode: str, update_running: bool = True):
    """Normalize per feature.  Train mode uses batch statistics (biased
    variance) and, unless update_running is off, refreshes the running
    stats; infer mode normalizes by the running stats."""
    x = np.asarray(x)
    if mode == "train":
        if x.shape[0] < 2:
            raise ContractError("batchnorm train mode needs batch size >= 2")
        mean = x.mean(axis=0)
        centered = x - mean
        var = (centered * centered).mean(axis=0)
        inv_std = 1.0 / np.sqrt(var + p.epsilon)
        xhat = centered * inv_std
        if update_running:
            m = p.momentum
            p.running_mean[...] = m * p.running_mean + (1.0 - m) * mean
            p.running_var[...] = m * p.running_var + (1.0 - m) * var
        cache = {"xhat": xhat, "centered": centered, "inv_std": inv_std}
        return p.gamma * xhat + p.beta, cache
    if mode == "infer":
        xhat = (x - p.running_mean) / np.sqrt(p.running_var + p.epsilon)
        return p.gamma * xhat + p.beta, {"xhat": xhat}
    raise ContractError(f"unknown batchnorm mode {mode!r}")


def batchnorm_backward(cache, p: BatchNormParams, dy):
    """Backward through train-mode normalization, batch statistics included."""
    xhat = cache["xhat"]
    centered = cache["centered"]
    inv_std = cache["inv_std"]
    N = xhat.shape[0]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * p.gamma
    dvar = (dxhat * centered).sum(axis=0) * (-0.5) * inv_std**3
    dmean = -(dxhat.sum(axis=0)) * inv_std + dvar * (-2.0 / N) * centered.sum(axis=0)
    dx = dxhat * inv_std + dvar * (2.0 / N) * centered + dmean / N
    return dx, {"gamma": dgamma, "beta": dbeta}


def relu_forward(x):
    return np.maximum(x, 0), {"x": x}


def relu_backward(cache, dy):
    return dy * (cache["x"] > 0)


def tanh_forward(x):
    y = np.tanh(x)
    return y, {"y": y}


def tanh_backward(cache, dy):
    y = cache["y"]
    return dy * (1.0 - y * y)


ACTIVATIONS = {
    "relu": (relu_forward, relu_backward),
    "tanh": (tanh_forward, tanh_backward),
}


def softmax(z):
    """Row-wise softmax, shifted by the row max for stability."""
    z = np.asarray(z)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probabilities, labels) -> float:
    """Mean negative log-probability of the true class.

    Probabilities are clamped to LOG_CLAMP before the log so a confident
    wrong prediction yields a large but finite loss.
    """
    probs = np.asarray(probabilities)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ContractError(
            f"expected (N, C) probabilities and (N,) labels, got "
            f"{probs.shape} and {labels.shape}"
        )
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ContractError(
            f"label out of range 0..{probs.shape[1] - 1}: {labels}"
        )
    row_sums = probs.sum(axis=1)
    if np.abs(row_sums - 1.0).max() > 1e-6:
        raise ContractError("probability rows must sum to 1 within 1e-6")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, LOG_CLAMP)).mean())


def softmax_cross_entropy_backward(probabilities, labels):
    """Gradient of the mean cross-entropy w.r.t. the softmax *logits*:
    (p - onehot) / N."""
    probs = np.asarray(probabilities)
    labels = np.asarray(labels, dtype=np.int64)
    dz = probs.copy()
    dz[np.arange(len(labels)), labels] -= 1.0
    return dz / len(labels)
