"""Gate-kernel backends: the compiled extension must match the NumPy
reference, forward and backward, in both precisions."""

import numpy as np
import pytest

from dancesig.neural import backend
from dancesig.neural import gates_ref


def _random_state(rng, N, H, dtype):
    pre = rng.normal(size=(N, 4 * H)).astype(dtype)
    c_prev = rng.normal(size=(N, H)).astype(dtype)
    peeps = tuple(rng.normal(size=H).astype(dtype) for _ in range(3))
    return pre, c_prev, peeps


def _run_forward(kern, pre, c_prev, peeps, dtype):
    N, H = c_prev.shape
    outs = tuple(np.empty((N, H), dtype=dtype) for _ in range(7))
    kern.cell_forward(pre, c_prev, *peeps, *outs)
    return outs  # i, f, g, c, o, tanh_c, h


class TestBackendSelection:
    def test_active_backend_is_named(self):
        assert backend.active_backend() in ("compiled", "numpy")

    def test_numpy_always_available(self):
        assert backend.get_kernels("numpy") is gates_ref

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            backend.get_kernels("cuda")


class TestReferenceForward:
    def test_zero_everything(self):
        N, H = 2, 3
        outs = _run_forward(
            gates_ref,
            np.zeros((N, 4 * H)),
            np.zeros((N, H)),
            (np.zeros(H), np.zeros(H), np.zeros(H)),
            np.float64,
        )
        i, f, g, c, o, tanh_c, h = outs
        np.testing.assert_array_equal(i, np.full((N, H), 0.5))
        np.testing.assert_array_equal(f, np.full((N, H), 0.5))
        np.testing.assert_array_equal(o, np.full((N, H), 0.5))
        assert not c.any() and not h.any()

    def test_gates_in_unit_interval(self, rng):
        pre, c_prev, peeps = _random_state(rng, 8, 16, np.float64)
        i, f, g, c, o, tanh_c, h = _run_forward(gates_ref, pre, c_prev, peeps, np.float64)
        for gate in (i, f, o):
            assert (gate > 0).all() and (gate < 1).all()
        assert np.isfinite(c).all() and np.isfinite(h).all()


@pytest.mark.skipif(not backend.compiled_available(), reason="extension not built")
class TestCompiledMatchesReference:
    @pytest.mark.parametrize("dtype,tol", [(np.float32, 1e-6), (np.float64, 1e-14)])
    def test_forward(self, rng, dtype, tol):
        kc = backend.get_kernels("compiled")
        for _ in range(10):
            pre, c_prev, peeps = _random_state(rng, 6, 11, dtype)
            got = _run_forward(kc, pre, c_prev, peeps, dtype)
            want = _run_forward(gates_ref, pre, c_prev, peeps, dtype)
            for a, b in zip(got, want):
                np.testing.assert_allclose(a, b, rtol=tol, atol=tol)

    @pytest.mark.parametrize("dtype,tol", [(np.float32, 1e-5), (np.float64, 1e-13)])
    def test_backward(self, rng, dtype, tol):
        kc = backend.get_kernels("compiled")
        N, H = 6, 11
        pre, c_prev, peeps = _random_state(rng, N, H, dtype)
        i, f, g, c, o, tanh_c, h = _run_forward(gates_ref, pre, c_prev, peeps, dtype)
        dh = rng.normal(size=(N, H)).astype(dtype)
        dc_in = rng.normal(size=(N, H)).astype(dtype)

        results = {}
        for name, kern in (("compiled", kc), ("numpy", gates_ref)):
            d_pre = np.empty((N, 4 * H), dtype=dtype)
            dc_prev = np.empty((N, H), dtype=dtype)
            dws = tuple(np.zeros(H, dtype=dtype) for _ in range(3))
            kern.cell_backward(
                dh, dc_in, i, f, g, o, c, tanh_c, c_prev, *peeps,
                d_pre, dc_prev, *dws,
            )
            results[name] = (d_pre, dc_prev) + dws
        for a, b in zip(results["compiled"], results["numpy"]):
            np.testing.assert_allclose(a, b, rtol=tol, atol=tol)

    def test_forward_float32_and_float64_consistent(self, rng):
        kc = backend.get_kernels("compiled")
        pre, c_prev, peeps = _random_state(rng, 3, 5, np.float64)
        hi = _run_forward(kc, pre, c_prev, peeps, np.float64)
        lo = _run_forward(
            kc,
            pre.astype(np.float32),
            c_prev.astype(np.float32),
            tuple(p.astype(np.float32) for p in peeps),
            np.float32,
        )
        for a, b in zip(hi, lo):
            np.testing.assert_allclose(a, b.astype(np.float64), atol=1e-5)

    def test_float32_transcendental_accuracy(self):
        # the compiled float32 path uses a polynomial expf; pin its
        # absolute accuracy against an exact float64 evaluation over the
        # realistic pre-activation range, saturated tails included
        kc = backend.get_kernels("compiled")
        H = 4096
        x = np.linspace(-30.0, 30.0, H)
        pre64 = np.tile(x, (1, 4)).reshape(1, 4 * H)
        c_prev = np.zeros((1, H))
        zeros = np.zeros(H)
        exact = _run_forward(
            gates_ref, pre64, c_prev, (zeros, zeros, zeros), np.float64
        )
        approx = _run_forward(
            kc,
            pre64.astype(np.float32),
            c_prev.astype(np.float32),
            (zeros.astype(np.float32),) * 3,
            np.float32,
        )
        for a, b in zip(exact, approx):
            assert np.abs(a - b.astype(np.float64)).max() < 5e-7
