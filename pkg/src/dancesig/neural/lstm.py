"""Peephole LSTM: parameters, forward over a sequence, and exact BPTT.

Gate order everywhere is [input | forget | candidate | output].  The input
and forget gates peek at the previous cell state, the output gate at the
freshly updated one, and the new hidden state is o * tanh(c).

Weights are stored stacked (W_x: (4H, D), W_h: (4H, H), b: (4H,)) so the
four gate projections run as one GEMM per step; per-gate views are exposed
for inspection and checkpointing.  Peephole weights are diagonal vectors
by default; `peephole="full"` switches to full H x H matrices (NumPy path
only, for fidelity experiments).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import ContractError
from .backend import get_kernels

GATE_NAMES = ("i", "f", "c", "o")


@dataclass
class LstmParams:
    """All learnable tensors of one LSTM layer."""

    W_x: np.ndarray  # (4H, D)
    W_h: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)
    w_ci: np.ndarray  # (H,) diagonal or (H, H) full
    w_cf: np.ndarray
    w_co: np.ndarray
    peephole: str = "diagonal"

    def __post_init__(self):
        if self.peephole not in ("diagonal", "full"):
            raise ContractError(f"unknown peephole mode {self.peephole!r}")
        H = self.hidden_dim
        if self.W_x.shape[0] != 4 * H or self.W_h.shape != (4 * H, H):
            raise ContractError(
                f"inconsistent LSTM shapes: W_x {self.W_x.shape}, W_h {self.W_h.shape}"
            )
        want = (H,) if self.peephole == "diagonal" else (H, H)
        for name, w in (("w_ci", self.w_ci), ("w_cf", self.w_cf), ("w_co", self.w_co)):
            if w.shape != want:
                raise ContractError(f"{name} has shape {w.shape}, expected {want}")

    @property
    def input_dim(self) -> int:
        return self.W_x.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_h.shape[1]

    @property
    def dtype(self):
        return self.W_x.dtype

    def gate_view(self, stacked: np.ndarray, gate: str) -> np.ndarray:
        """Slice of a stacked (4H, ...) tensor belonging to one gate."""
        H = self.hidden_dim
        k = GATE_NAMES.index(gate)
        return stacked[k * H : (k + 1) * H]

    def tensors(self) -> dict[str, np.ndarray]:
        """Trainable tensors keyed by name."""
        return {
            "W_x": self.W_x,
            "W_h": self.W_h,
            "b": self.b,
            "w_ci": self.w_ci,
            "w_cf": self.w_cf,
            "w_co": self.w_co,
        }


def init_lstm_params(
    input_dim: int,
    hidden_dim: int,
    rng: np.random.Generator,
    dtype=np.float32,
    peephole: str = "diagonal",
    forget_bias: float = 1.0,
) -> LstmParams:
    """Glorot-uniform input/recurrent weights, zero peepholes, forget bias 1."""
    D, H = input_dim, hidden_dim
    lim_x = np.sqrt(6.0 / (D + H))
    lim_h = np.sqrt(6.0 / (H + H))
    W_x = rng.uniform(-lim_x, lim_x, size=(4 * H, D)).astype(dtype)
    W_h = rng.uniform(-lim_h, lim_h, size=(4 * H, H)).astype(dtype)
    b = np.zeros(4 * H, dtype=dtype)
    b[H : 2 * H] = forget_bias
    peep_shape = (H,) if peephole == "diagonal" else (H, H)
    return LstmParams(
        W_x=W_x,
        W_h=W_h,
        b=b,
        w_ci=np.zeros(peep_shape, dtype=dtype),
        w_cf=np.zeros(peep_shape, dtype=dtype),
        w_co=np.zeros(peep_shape, dtype=dtype),
        peephole=peephole,
    )


@dataclass
class LstmCache:
    """Everything the backward pass needs, stored timestep-major."""

    x: np.ndarray  # (T, N, D)
    h_prev: np.ndarray  # (T, N, H)
    c_prev: np.ndarray  # (T, N, H)
    i: np.ndarray  # (T, N, H) gate activations
    f: np.ndarray
    g: np.ndarray  # candidate, tanh-activated
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    single: bool  # input was a (T, D) sequence without a batch axis


def _check_cell_shapes(p: LstmParams, x, h_prev, c_prev):
    if x.shape[-1] != p.input_dim:
        raise ContractError(
            f"input dim {x.shape[-1]} does not match LSTM input_dim {p.input_dim}"
        )
    H = p.hidden_dim
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ContractError(
            f"state dims {h_prev.shape[-1]}/{c_prev.shape[-1]} do not match "
            f"hidden_dim {H}"
        )


def _full_peephole_forward(pre, c_prev, p):
    """Gate math with full-matrix peepholes; returns the gate arrays."""
    H = p.hidden_dim
    i = expit(pre[:, :H] + c_prev @ p.w_ci.T)
    f = expit(pre[:, H : 2 * H] + c_prev @ p.w_cf.T)
    g = np.tanh(pre[:, 2 * H : 3 * H])
    c = f * c_prev + i * g
    o = expit(pre[:, 3 * H :] + c @ p.w_co.T)
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return i, f, g, c, o, tanh_c, h


def lstm_cell_forward(x_t, h_prev, c_prev, p: LstmParams):
    """One cell step.  Accepts vectors (D,), (H,) or batches (N, D), (N, H).

    Returns (h_t, c_t, cache) where cache holds the gate activations needed
    by the backward pass.
    """
    x_t = np.asarray(x_t, dtype=p.dtype)
    single = x_t.ndim == 1
    x2 = np.atleast_2d(x_t)
    h2 = np.ascontiguousarray(np.atleast_2d(np.asarray(h_prev, dtype=p.dtype)))
    c2 = np.ascontiguousarray(np.atleast_2d(np.asarray(c_prev, dtype=p.dtype)))
    _check_cell_shapes(p, x2, h2, c2)
    pre = x2 @ p.W_x.T + h2 @ p.W_h.T + p.b
    N, H = c2.shape
    if p.peephole == "full":
        i, f, g, c, o, tanh_c, h = _full_peephole_forward(pre, c2, p)
    else:
        kern = get_kernels()
        i, f, g, c, o, tanh_c, h = (np.empty((N, H), dtype=p.dtype) for _ in range(7))
        kern.cell_forward(pre, c2, p.w_ci, p.w_cf, p.w_co, i, f, g, c, o, tanh_c, h)
    cache = {
        "x": x2, "h_prev": h2, "c_prev": c2,
        "i": i, "f": f, "g": g, "o": o, "c": c, "tanh_c": tanh_c,
    }
    if single:
        return h[0], c[0], cache
    return h, c, cache


def lstm_forward(X, p: LstmParams, h0=None, c0=None):
    """Run the cell over a sequence; returns (h_T, cache).

    X is (T, D) for a single sequence or (N, T, D) for a batch.  h_T is the
    final hidden state, the sequence embedding fed to the dense head.
    """
    X = np.asarray(X, dtype=p.dtype)
    single = X.ndim == 2
    if single:
        X = X[None]
    if X.ndim != 3:
        raise ContractError(f"expected (T, D) or (N, T, D) input, got {X.shape}")
    N, T, D = X.shape
    if T < 1:
        raise ContractError("sequence length must be >= 1")
    if D != p.input_dim:
        raise ContractError(f"input dim {D} does not match LSTM input_dim {p.input_dim}")
    H = p.hidden_dim
    dt = p.dtype

    Xt = np.ascontiguousarray(X.transpose(1, 0, 2))  # (T, N, D)
    # All four gate input-projections for all timesteps in one GEMM.
    pre_x = Xt.reshape(T * N, D) @ p.W_x.T + p.b
    pre_x = pre_x.reshape(T, N, 4 * H)

    h = np.zeros((N, H), dtype=dt) if h0 is None else np.array(h0, dtype=dt, copy=True)
    c = np.zeros((N, H), dtype=dt) if c0 is None else np.array(c0, dtype=dt, copy=True)
    h = np.ascontiguousarray(np.atleast_2d(h))
    c = np.ascontiguousarray(np.atleast_2d(c))

    cache = LstmCache(
        x=Xt,
        h_prev=np.empty((T, N, H), dtype=dt),
        c_prev=np.empty((T, N, H), dtype=dt),
        i=np.empty((T, N, H), dtype=dt),
        f=np.empty((T, N, H), dtype=dt),
        g=np.empty((T, N, H), dtype=dt),
        o=np.empty((T, N, H), dtype=dt),
        c=np.empty((T, N, H), dtype=dt),
        tanh_c=np.empty((T, N, H), dtype=dt),
        single=single,
    )
    kern = get_kernels() if p.peephole == "diagonal" else None
    h_buf = np.empty((N, H), dtype=dt)
    for t in range(T):
        cache.h_prev[t] = h
        cache.c_prev[t] = c
        pre = pre_x[t] + h @ p.W_h.T
        if kern is None:
            i, f, g, c_new, o, tanh_c, h_new = _full_peephole_forward(pre, c, p)
            cache.i[t], cache.f[t], cache.g[t] = i, f, g
            cache.c[t], cache.o[t], cache.tanh_c[t] = c_new, o, tanh_c
            h = np.ascontiguousarray(h_new)
            c = np.ascontiguousarray(c_new)
        else:
            # h_buf is read (GEMM, cache copy) before the next step rewrites it
            kern.cell_forward(
                pre, c, p.w_ci, p.w_cf, p.w_co,
                cache.i[t], cache.f[t], cache.g[t], cache.c[t], cache.o[t],
                cache.tanh_c[t], h_buf,
            )
            h = h_buf
            c = cache.c[t]
    h_T = np.array(h[0] if single else h, copy=True)
    return h_T, cache


def lstm_backward(cache: LstmCache, p: LstmParams, dh_T) -> dict[str, np.ndarray]:
    """Exact gradients of a loss on h_T w.r.t. every LSTM tensor (BPTT)."""
    T, N, H = cache.i.shape
    dt = p.dtype
    dh_T = np.asarray(dh_T, dtype=dt)
    dh = np.ascontiguousarray(np.atleast_2d(dh_T))
    if dh.shape != (N, H):
        raise ContractError(f"dh_T shape {dh_T.shape} does not match ({N}, {H})")

    d_pre = np.empty((T, N, 4 * H), dtype=dt)
    dc_a = np.zeros((N, H), dtype=dt)
    dc_b = np.empty((N, H), dtype=dt)
    full = p.peephole == "full"
    if full:
        dw_ci = np.zeros((H, H), dtype=dt)
        dw_cf = np.zeros((H, H), dtype=dt)
        dw_co = np.zeros((H, H), dtype=dt)
    else:
        kern = get_kernels()
        dw_ci = np.zeros(H, dtype=dt)
        dw_cf = np.zeros(H, dtype=dt)
        dw_co = np.zeros(H, dtype=dt)

    for t in range(T - 1, -1, -1):
        if full:
            i, f, g, o = cache.i[t], cache.f[t], cache.g[t], cache.o[t]
            c, tanh_c, c_prev = cache.c[t], cache.tanh_c[t], cache.c_prev[t]
            d_pre_o = dh * tanh_c * o * (1.0 - o)
            dw_co += d_pre_o.T @ c
            dc = dc_a + dh * o * (1.0 - tanh_c * tanh_c) + d_pre_o @ p.w_co
            d_pre_g = dc * i * (1.0 - g * g)
            d_pre_i = dc * g * i * (1.0 - i)
            d_pre_f = dc * c_prev * f * (1.0 - f)
            dw_ci += d_pre_i.T @ c_prev
            dw_cf += d_pre_f.T @ c_prev
            d_pre[t, :, :H] = d_pre_i
            d_pre[t, :, H : 2 * H] = d_pre_f
            d_pre[t, :, 2 * H : 3 * H] = d_pre_g
            d_pre[t, :, 3 * H :] = d_pre_o
            dc_b[...] = dc * f + d_pre_i @ p.w_ci + d_pre_f @ p.w_cf
        else:
            kern.cell_backward(
                dh, dc_a,
                cache.i[t], cache.f[t], cache.g[t], cache.o[t],
                cache.c[t], cache.tanh_c[t], cache.c_prev[t],
                p.w_ci, p.w_cf, p.w_co,
                d_pre[t], dc_b, dw_ci, dw_cf, dw_co,
            )
        dh = np.ascontiguousarray(d_pre[t] @ p.W_h)
        dc_a, dc_b = dc_b, dc_a

    flat_pre = d_pre.reshape(T * N, 4 * H)
    dW_x = flat_pre.T @ cache.x.reshape(T * N, -1)
    dW_h = flat_pre.T @ cache.h_prev.reshape(T * N, H)
    db = flat_pre.sum(axis=0)
    return {
        "W_x": dW_x, "W_h": dW_h, "b": db,
        "w_ci": dw_ci, "w_cf": dw_cf, "w_co": dw_co,
    }
