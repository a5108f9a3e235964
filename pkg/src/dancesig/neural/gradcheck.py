"""Central finite-difference gradients, the oracle for every backward pass."""

from __future__ import annotations

import numpy as np


def finite_difference_gradient(loss_fn, params: dict[str, np.ndarray],
                               step: float = 1e-5) -> dict[str, np.ndarray]:
    """Numeric gradient of loss_fn() w.r.t. every scalar in params.

    loss_fn takes no arguments and must be a deterministic function of the
    (mutated-in-place) parameter arrays.  Each scalar is perturbed by
    +/- step and restored bit-exactly afterwards.
    """
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            loss_plus = loss_fn()
            flat[k] = original - step
            loss_minus = loss_fn()
            flat[k] = original
            gflat[k] = (loss_plus - loss_minus) / (2.0 * step)
        grads[name] = g
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   zero_floor: float = 1e-10) -> float:
    """Norm-based relative disagreement of two gradient tensors.

    When both norms sit below zero_floor the tensors agree as zeros
    (relative error is undefined there); this happens for gradients that
    are structurally zero, e.g. a dense bias feeding batch norm.
    """
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    norm_a = float(np.linalg.norm(a))
    norm_n = float(np.linalg.norm(n))
    if norm_a < zero_floor and norm_n < zero_floor:
        return 0.0
    return float(np.linalg.norm(a - n) / max(norm_a + norm_n, zero_floor))
