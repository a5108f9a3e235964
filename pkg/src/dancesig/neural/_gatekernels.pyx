# cython: boundscheck=False, wraparound=False
"""Compiled fused kernels for the peephole LSTM cell.

Thin dispatch over the C routines in _gatemath.h; same contract as
gates_ref (gate order [input | forget | candidate | output] in the
(N, 4H) pre-activation block, results written into caller arrays).
"""

BACKEND_NAME = "compiled"

ctypedef fused real:
    float
    double

cdef extern from "_gatemath.h" nogil:
    void ds_cell_forward_f32(
        const float* pre, const float* c_prev,
        const float* w_ci, const float* w_cf, const float* w_co,
        float* i, float* f, float* g, float* c, float* o,
        float* tanh_c, float* h, ptrdiff_t N, ptrdiff_t H)
    void ds_cell_forward_f64(
        const double* pre, const double* c_prev,
        const double* w_ci, const double* w_cf, const double* w_co,
        double* i, double* f, double* g, double* c, double* o,
        double* tanh_c, double* h, ptrdiff_t N, ptrdiff_t H)
    void ds_cell_backward_f32(
        const float* dh, const float* dc_in,
        const float* i, const float* f, const float* g, const float* o,
        const float* c, const float* tanh_c, const float* c_prev,
        const float* w_ci, const float* w_cf, const float* w_co,
        float* d_pre, float* dc_prev,
        float* dw_ci, float* dw_cf, float* dw_co,
        ptrdiff_t N, ptrdiff_t H)
    void ds_cell_backward_f64(
        const double* dh, const double* dc_in,
        const double* i, const double* f, const double* g, const double* o,
        const double* c, const double* tanh_c, const double* c_prev,
        const double* w_ci, const double* w_cf, const double* w_co,
        double* d_pre, double* dc_prev,
        double* dw_ci, double* dw_cf, double* dw_co,
        ptrdiff_t N, ptrdiff_t H)


def cell_forward(real[:, ::1] pre, real[:, ::1] c_prev,
                 real[::1] w_ci, real[::1] w_cf, real[::1] w_co,
                 real[:, ::1] i, real[:, ::1] f, real[:, ::1] g,
                 real[:, ::1] c, real[:, ::1] o, real[:, ::1] tanh_c,
                 real[:, ::1] h):
    cdef ptrdiff_t N = c_prev.shape[0]
    cdef ptrdiff_t H = c_prev.shape[1]
    with nogil:
        if real is float:
            ds_cell_forward_f32(&pre[0, 0], &c_prev[0, 0],
                                &w_ci[0], &w_cf[0], &w_co[0],
                                &i[0, 0], &f[0, 0], &g[0, 0], &c[0, 0],
                                &o[0, 0], &tanh_c[0, 0], &h[0, 0], N, H)
        else:
            ds_cell_forward_f64(&pre[0, 0], &c_prev[0, 0],
                                &w_ci[0], &w_cf[0], &w_co[0],
                                &i[0, 0], &f[0, 0], &g[0, 0], &c[0, 0],
                                &o[0, 0], &tanh_c[0, 0], &h[0, 0], N, H)


def cell_backward(real[:, ::1] dh, real[:, ::1] dc_in,
                  real[:, ::1] i, real[:, ::1] f, real[:, ::1] g,
                  real[:, ::1] o, real[:, ::1] c, real[:, ::1] tanh_c,
                  real[:, ::1] c_prev,
                  real[::1] w_ci, real[::1] w_cf, real[::1] w_co,
                  real[:, ::1] d_pre, real[:, ::1] dc_prev,
                  real[::1] dw_ci, real[::1] dw_cf, real[::1] dw_co):
    cdef ptrdiff_t N = c_prev.shape[0]
    cdef ptrdiff_t H = c_prev.shape[1]
    with nogil:
        if real is float:
            ds_cell_backward_f32(&dh[0, 0], &dc_in[0, 0],
                                 &i[0, 0], &f[0, 0], &g[0, 0], &o[0, 0],
                                 &c[0, 0], &tanh_c[0, 0], &c_prev[0, 0],
                                 &w_ci[0], &w_cf[0], &w_co[0],
                                 &d_pre[0, 0], &dc_prev[0, 0],
                                 &dw_ci[0], &dw_cf[0], &dw_co[0], N, H)
        else:
            ds_cell_backward_f64(&dh[0, 0], &dc_in[0, 0],
                                 &i[0, 0], &f[0, 0], &g[0, 0], &o[0, 0],
                                 &c[0, 0], &tanh_c[0, 0], &c_prev[0, 0],
                                 &w_ci[0], &w_cf[0], &w_co[0],
                                 &d_pre[0, 0], &dc_prev[0, 0],
                                 &dw_ci[0], &dw_cf[0], &dw_co[0], N, H)
