/* Fused elementwise math for the peephole LSTM cell.
 *
 * The float32 path uses a branch-free polynomial expf (Cephes
 * coefficients, ~2 ulp) so GCC can auto-vectorize the whole gate update;
 * the float64 path keeps libm transcendentals since it exists for
 * verification work, not speed.  Gate order in `pre` is
 * [input | forget | candidate | output], each block H wide.
 */

#ifndef DANCESIG_GATEMATH_H
#define DANCESIG_GATEMATH_H

#include <math.h>
#include <stddef.h>
#include <stdint.h>
#include <string.h>

static inline float ds_expf(float x) {
    const float max_in = 88.3762626647949f;
    const float min_in = -87.3365478515625f;
    x = x > max_in ? max_in : x;
    x = x < min_in ? min_in : x;
    /* k = round(x / ln 2) via the 1.5 * 2^23 magic-number trick */
    float t = x * 1.44269504088896341f + 12582912.0f;
    float k = t - 12582912.0f;
    x -= k * 0.693359375f;        /* ln 2, split high/low */
    x += k * 2.12194440e-4f;
    float y = 1.9875691500e-4f;
    y = y * x + 1.3981999507e-3f;
    y = y * x + 8.3334519073e-3f;
    y = y * x + 4.1665795894e-2f;
    y = y * x + 1.6666665459e-1f;
    y = y * x + 5.0000001201e-1f;
    y = y * x * x + x + 1.0f;
    int32_t ik = (int32_t)k;
    uint32_t bits = (uint32_t)(ik + 127) << 23;
    float scale;
    memcpy(&scale, &bits, sizeof scale);
    return y * scale;
}

static inline float ds_sigmoidf(float x) {
    return 1.0f / (1.0f + ds_expf(-x));
}

static inline float ds_tanhf(float x) {
    float t = ds_expf(-2.0f * x);
    return (1.0f - t) / (1.0f + t);
}

static inline double ds_sigmoid(double x) {
    return 1.0 / (1.0 + exp(-x));
}

static void ds_cell_forward_f32(
    const float* restrict pre, const float* restrict c_prev,
    const float* restrict w_ci, const float* restrict w_cf,
    const float* restrict w_co,
    float* restrict i, float* restrict f, float* restrict g,
    float* restrict c, float* restrict o, float* restrict tanh_c,
    float* restrict h, ptrdiff_t N, ptrdiff_t H)
{
    for (ptrdiff_t n = 0; n < N; ++n) {
        const float* prow = pre + n * 4 * H;
        const float* cp = c_prev + n * H;
        ptrdiff_t row = n * H;
        for (ptrdiff_t k = 0; k < H; ++k) {
            float cpv = cp[k];
            float iv = ds_sigmoidf(prow[k] + w_ci[k] * cpv);
            float fv = ds_sigmoidf(prow[H + k] + w_cf[k] * cpv);
            float gv = ds_tanhf(prow[2 * H + k]);
            float cv = fv * cpv + iv * gv;
            float ov = ds_sigmoidf(prow[3 * H + k] + w_co[k] * cv);
            float tv = ds_tanhf(cv);
            i[row + k] = iv;
            f[row + k] = fv;
            g[row + k] = gv;
            c[row + k] = cv;
            o[row + k] = ov;
            tanh_c[row + k] = tv;
            h[row + k] = ov * tv;
        }
    }
}

static void ds_cell_forward_f64(
    const double* restrict pre, const double* restrict c_prev,
    const double* restrict w_ci, const double* restrict w_cf,
    const double* restrict w_co,
    double* restrict i, double* restrict f, double* restrict g,
    double* restrict c, double* restrict o, double* restrict tanh_c,
    double* restrict h, ptrdiff_t N, ptrdiff_t H)
{
    for (ptrdiff_t n = 0; n < N; ++n) {
        const double* prow = pre + n * 4 * H;
        const double* cp = c_prev + n * H;
        ptrdiff_t row = n * H;
        for (ptrdiff_t k = 0; k < H; ++k) {
            double cpv = cp[k];
            double iv = ds_sigmoid(prow[k] + w_ci[k] * cpv);
            double fv = ds_sigmoid(prow[H + k] + w_cf[k] * cpv);
            double gv = tanh(prow[2 * H + k]);
            double cv = fv * cpv + iv * gv;
            double ov = ds_sigmoid(prow[3 * H + k] + w_co[k] * cv);
            double tv = tanh(cv);
            i[row + k] = iv;
            f[row + k] = fv;
            g[row + k] = gv;
            c[row + k] = cv;
            o[row + k] = ov;
            tanh_c[row + k] = tv;
            h[row + k] = ov * tv;
        }
    }
}

/* Backward of one cell step: gradients w.r.t. the pre-gate activations,
 * the previous cell state, and the (accumulated) diagonal peepholes.
 * The output gate peeks at the current cell, so its pre-gate gradient
 * feeds dc before the cell update is differentiated. */

#define DS_CELL_BACKWARD_BODY(T)                                          \
    for (ptrdiff_t n = 0; n < N; ++n) {                                   \
        ptrdiff_t row = n * H;                                            \
        T* drow = d_pre + n * 4 * H;                                      \
        for (ptrdiff_t k = 0; k < H; ++k) {                               \
            T iv = i[row + k], fv = f[row + k], gv = g[row + k];          \
            T ov = o[row + k], tv = tanh_c[row + k];                      \
            T cpv = c_prev[row + k];                                      \
            T dpo = dh[row + k] * tv * ov * (1 - ov);                     \
            T dcv = dc_in[row + k] + dh[row + k] * ov * (1 - tv * tv)     \
                    + dpo * w_co[k];                                      \
            T dpg = dcv * iv * (1 - gv * gv);                             \
            T dpi = dcv * gv * iv * (1 - iv);                             \
            T dpf = dcv * cpv * fv * (1 - fv);                            \
            drow[k] = dpi;                                                \
            drow[H + k] = dpf;                                            \
            drow[2 * H + k] = dpg;                                        \
            drow[3 * H + k] = dpo;                                        \
            dc_prev[row + k] = dcv * fv + dpi * w_ci[k] + dpf * w_cf[k];  \
            dw_ci[k] += dpi * cpv;                                        \
            dw_cf[k] += dpf * cpv;                                        \
            dw_co[k] += dpo * c[row + k];                                 \
        }                                                                 \
    }

static void ds_cell_backward_f32(
    const float* restrict dh, const float* restrict dc_in,
    const float* restrict i, const float* restrict f,
    const float* restrict g, const float* restrict o,
    const float* restrict c, const float* restrict tanh_c,
    const float* restrict c_prev,
    const float* restrict w_ci, const float* restrict w_cf,
    const float* restrict w_co,
    float* restrict d_pre, float* restrict dc_prev,
    float* restrict dw_ci, float* restrict dw_cf, float* restrict dw_co,
    ptrdiff_t N, ptrdiff_t H)
{
    DS_CELL_BACKWARD_BODY(float)
}

static void ds_cell_backward_f64(
    const double* restrict dh, const double* restrict dc_in,
    const double* restrict i, const double* restrict f,
    const double* restrict g, const double* restrict o,
    const double* restrict c, const double* restrict tanh_c,
    const double* restrict c_prev,
    const double* restrict w_ci, const double* restrict w_cf,
    const double* restrict w_co,
    double* restrict d_pre, double* restrict dc_prev,
    double* restrict dw_ci, double* restrict dw_cf, double* restrict dw_co,
    ptrdiff_t N, ptrdiff_t H)
{
    DS_CELL_BACKWARD_BODY(double)
}

#undef DS_CELL_BACKWARD_BODY

#endif /* DANCESIG_GATEMATH_H */
