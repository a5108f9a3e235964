"""Adam with bias correction and 1/(1 + decay*t) learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, TrainingError


@dataclass
class AdamState:
    """Optimizer state: one (m, v) pair per named parameter tensor."""

    learning_rate: float = 1e-4
    decay: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0  # completed steps
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def effective_lr(self, t: int | None = None) -> float:
        """Learning rate applied on step t+1 (t = completed steps so far)."""
        steps = self.t if t is None else t
        return self.learning_rate / (1.0 + self.decay * steps)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> AdamState:
    """One in-place Adam update of every named parameter.

    Parameters are mutated through their arrays so any views held elsewhere
    (layer objects) stay current.  Raises TrainingError naming the tensor
    if its gradient is non-finite.
    """
    if set(params) != set(grads):
        missing = set(params).symmetric_difference(grads)
        raise ContractError(f"params/grads key mismatch: {sorted(missing)}")
    lr_t = state.effective_lr()
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**state.t
    bias2 = 1.0 - b2**state.t
    for name in sorted(params):
        p = params[name]
        g = np.asarray(grads[name], dtype=p.dtype)
        if g.shape != p.shape:
            raise ContractError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} {p.shape}"
            )
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / bias1
        v_hat = v / bias2
        p[...] = p - lr_t * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
