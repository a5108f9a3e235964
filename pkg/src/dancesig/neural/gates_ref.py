"""NumPy reference implementation of the fused LSTM gate kernels.

Mirrors the calling convention of the compiled `_gatekernels` extension:
both operate on the pre-gate activations of one timestep (matmul results,
shape (N, 4H), gate order [input | forget | candidate | output]) and write
their results into caller-provided arrays.  The compiled module is a pure
speedup; this module is the always-available fallback and the equivalence
oracle for it.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

BACKEND_NAME = "numpy"


def cell_forward(pre, c_prev, w_ci, w_cf, w_co, i, f, g, c, o, tanh_c, h):
    """One peephole cell step given pre-gate activations.

    i = sigmoid(pre_i + w_ci * c_prev)
    f = sigmoid(pre_f + w_cf * c_prev)
    g = tanh(pre_g)
    c = f * c_prev + i * g
    o = sigmoid(pre_o + w_co * c)      # peephole looks at the *new* cell
    h = o * tanh(c)
    """
    H = c_prev.shape[1]
    i[...] = expit(pre[:, 0 * H : 1 * H] + w_ci * c_prev)
    f[...] = expit(pre[:, 1 * H : 2 * H] + w_cf * c_prev)
    g[...] = np.tanh(pre[:, 2 * H : 3 * H])
    c[...] = f * c_prev + i * g
    o[...] = expit(pre[:, 3 * H : 4 * H] + w_co * c)
    tanh_c[...] = np.tanh(c)
    h[...] = o * tanh_c


def cell_backward(
    dh, dc_in, i, f, g, o, c, tanh_c, c_prev, w_ci, w_cf, w_co,
    d_pre, dc_prev, dw_ci, dw_cf, dw_co,
):
    """Backward of cell_forward.

    Writes the gradient w.r.t. the pre-gate activations into d_pre and the
    gradient flowing to the previous cell state into dc_prev; accumulates
    the diagonal peephole gradients into dw_ci/dw_cf/dw_co.  The output
    gate's peephole reads the current cell, so its pre-gate gradient feeds
    back into dc before the cell update is differentiated.
    """
    H = c_prev.shape[1]
    d_pre_o = dh * tanh_c * o * (1.0 - o)
    dc = dc_in + dh * o * (1.0 - tanh_c * tanh_c) + d_pre_o * w_co
    d_pre_g = dc * i * (1.0 - g * g)
    d_pre_i = dc * g * i * (1.0 - i)
    d_pre_f = dc * c_prev * f * (1.0 - f)
    d_pre[:, 0 * H : 1 * H] = d_pre_i
    d_pre[:, 1 * H : 2 * H] = d_pre_f
    d_pre[:, 2 * H : 3 * H] = d_pre_g
    d_pre[:, 3 * H : 4 * H] = d_pre_o
    dc_prev[...] = dc * f + d_pre_i * w_ci + d_pre_f * w_cf
    dw_ci += (d_pre_i * c_prev).sum(axis=0)
    dw_cf += (d_pre_f * c_prev).sum(axis=0)
    dw_co += (d_pre_o * c).sum(axis=0)
