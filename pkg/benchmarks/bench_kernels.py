"""Benchmark: compiled gate kernels vs the NumPy fallback.

Times the fused per-timestep cell math in isolation and a full
forward+backward pass over a training-shaped batch, on both backends.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from dancesig.neural import backend
from dancesig.neural.lstm import init_lstm_params, lstm_backward, lstm_forward


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_cell(kern, N, H, dtype, repeats):
    rng = np.random.default_rng(0)
    pre = rng.normal(size=(N, 4 * H)).astype(dtype)
    c_prev = rng.normal(size=(N, H)).astype(dtype)
    peeps = tuple(rng.normal(size=H).astype(dtype) for _ in range(3))
    outs = tuple(np.empty((N, H), dtype=dtype) for _ in range(7))

    def run():
        kern.cell_forward(pre, c_prev, *peeps, *outs)

    return time_fn(run, repeats)


def bench_sequence(backend_name, N, T, D, H, dtype, repeats):
    original = backend._ACTIVE
    backend._ACTIVE = backend.get_kernels(backend_name)
    try:
        rng = np.random.default_rng(0)
        p = init_lstm_params(D, H, rng, dtype)
        X = rng.normal(size=(N, T, D)).astype(dtype)
        dh = rng.normal(size=(N, H)).astype(dtype)

        def run():
            _, cache = lstm_forward(X, p)
            lstm_backward(cache, p, dh)

        return time_fn(run, repeats)
    finally:
        backend._ACTIVE = original


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats")
    args = parser.parse_args()
    repeats = 3 if args.quick else 10

    if not backend.compiled_available():
        print("compiled kernels unavailable; nothing to compare")
        return

    print(f"active backend: {backend.active_backend()}\n")
    print("fused cell step (isolated), batch 32:")
    print(f"{'H':>6} {'dtype':>8} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for H in (128, 512, 1024):
        for dtype in (np.float32, np.float64):
            t_ref = bench_cell(backend.get_kernels("numpy"), 32, H, dtype, repeats)
            t_fast = bench_cell(backend.get_kernels("compiled"), 32, H, dtype, repeats)
            print(
                f"{H:>6} {np.dtype(dtype).name:>8} {t_ref * 1e6:>10.1f}us "
                f"{t_fast * 1e6:>10.1f}us {t_ref / t_fast:>7.2f}x"
            )

    print("\nfull forward+backward, batch 32 x 48 steps (float32):")
    print(f"{'D':>6} {'H':>6} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for D, H in ((75, 128), (75, 512), (2251, 512)):
        t_ref = bench_sequence("numpy", 32, 48, D, H, np.float32, max(2, repeats // 3))
        t_fast = bench_sequence("compiled", 32, 48, D, H, np.float32, max(2, repeats // 3))
        print(
            f"{D:>6} {H:>6} {t_ref * 1e3:>10.1f}ms {t_fast * 1e3:>10.1f}ms "
            f"{t_ref / t_fast:>7.2f}x"
        )


if __name__ == "__main__":
    main()
