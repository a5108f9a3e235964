"""From-scratch numeric core: peephole LSTM, dense/batch-norm head, Adam.

The per-timestep gate math runs on a compiled Cython kernel when the
extension built, with a NumPy fallback selected at import (see backend).
"""

from .adam import AdamState, adam_step
from .backend import active_backend, compiled_available, get_kernels
from .gradcheck import finite_difference_gradient, relative_error
from .layers import (
    ACTIVATIONS,
    BatchNormParams,
    DenseParams,
    batchnorm_backward,
    batchnorm_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    init_batchnorm,
    init_dense,
    softmax,
    softmax_cross_entropy_backward,
)
from .lstm import (
    LstmCache,
    LstmParams,
    init_lstm_params,
    lstm_backward,
    lstm_cell_forward,
    lstm_forward,
)

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "BatchNormParams",
    "DenseParams",
    "LstmCache",
    "LstmParams",
    "active_backend",
    "adam_step",
    "batchnorm_backward",
    "batchnorm_forward",
    "compiled_available",
    "cross_entropy",
    "dense_backward",
    "dense_forward",
    "finite_difference_gradient",
    "get_kernels",
    "init_batchnorm",
    "init_dense",
    "init_lstm_params",
    "lstm_backward",
    "lstm_cell_forward",
    "lstm_forward",
    "relative_error",
    "softmax",
    "softmax_cross_entropy_backward",
]
