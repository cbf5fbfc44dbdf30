// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Compute kernels. Every kernel exists twice: a serial reference in
// nff::kernels::serial and an OpenMP variant in nff::kernels::par. The
// unqualified names dispatch between them by problem size.
//
// Determinism contract: for identical inputs, serial and par produce
// bit-identical outputs at any thread count. Order-sensitive reductions use a
// canonical fixed-size chunk order in both variants; everything else is
// per-output-element with a fixed inner loop order.

#pragma once

#include <cstdint>

namespace nff::kernels {

void set_parallel(bool on);
bool parallel_enabled();
int max_threads();
void set_threads(int n);

// Canonical reduction chunk. Changing this changes rounding, so it is fixed.
inline constexpr int64_t kChunk = 4096;

// View of a multiresolution grid layout for the grid_* kernels. Points live
// in [0,1]^3; a non-null actor array selects the hyperslice of a 4D grid.
struct GridSpec {
    int64_t levels = 0;
    int64_t feat = 0;
    const int64_t* res = nullptr;     // [levels] cells per axis
    const int64_t* rows = nullptr;    // [levels] table rows (power of two when hashed)
    const int64_t* row_off = nullptr; // [levels]
    const uint8_t* dense = nullptr;   // [levels]
    const int64_t* actor = nullptr;   // [n] per-sample actor index, or null
};

#define NFF_KERNEL_DECLS \
    /* elementwise; out may alias inputs */ \
    void vadd(const double* a, const double* b, double* out, int64_t n); \
    void vsub(const double* a, const double* b, double* out, int64_t n); \
    void vmul(const double* a, const double* b, double* out, int64_t n); \
    void vmuladd(const double* a, const double* b, double* acc, int64_t n); \
    void vscale(const double* a, double s, double* out, int64_t n); \
    void vshift(const double* a, double s, double* out, int64_t n); \
    void vaxpy(double a, const double* x, double* y, int64_t n); \
    void sigmoid(const double* x, double* y, int64_t n); \
    void sigmoid_bwd(const double* y, const double* gy, double* gx, int64_t n); \
    void relu(const double* x, double* y, int64_t n); \
    void relu_bwd(const double* x, const double* gy, double* gx, int64_t n); \
    void vexp(const double* x, double* y, int64_t n); \
    void vexp_bwd(const double* y, const double* gy, double* gx, int64_t n); \
    void vlog_eps(const double* x, double* y, int64_t n, double eps); \
    void vlog_eps_bwd(const double* x, const double* gy, double* gx, int64_t n, double eps); \
    void softplus(const double* x, double* y, int64_t n); \
    void softplus_bwd(const double* x, const double* gy, double* gx, int64_t n); \
    void vpow(const double* x, double* y, int64_t n, double p); \
    void vpow_bwd(const double* x, const double* gy, double* gx, int64_t n, double p); \
    /* reductions in canonical chunk order */ \
    double reduce_sum(const double* x, int64_t n); \
    void colsum(const double* x, int64_t rows, int64_t cols, double* out); \
    void rowsum(const double* x, int64_t rows, int64_t cols, double* out); \
    /* matmul family; accumulate=false overwrites C */ \
    void matmul_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, \
                   bool accumulate); \
    void matmul_abt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K, \
                    bool accumulate); \
    void matmul_atb(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, \
                    bool accumulate); \
    /* rows */ \
    void gather_rows(const double* src, int64_t src_rows, int64_t cols, const int64_t* idx, \
                     int64_t n, double* out); \
    void scale_rows(const double* x, const double* s, double* out, int64_t rows, int64_t cols); \
    void scale_rows_bwd_s(const double* x, const double* gy, double* gs, int64_t rows, \
                          int64_t cols); \
    /* out[i,:] = sum of rows [i*group, (i+1)*group) of x, in row order */ \
    void group_sum_rows(const double* x, int64_t out_rows, int64_t group, int64_t cols, \
                        double* out); \
    /* batched 3x3 rotation apply: R is (n,9) row-major, x is (n,3) */ \
    void rot_apply(const double* R, const double* x, double* y, int64_t n); \
    void rot_apply_bwd(const double* R, const double* x, const double* gy, double* gR, \
                       double* gx, int64_t n); \
    /* batched 3x3 matrix product: C_i = A_i * B_i, rows of (n,9) */ \
    void rot_compose(const double* A, const double* B, double* C, int64_t n); \
    void rot_compose_bwd(const double* A, const double* B, const double* gC, double* gA, \
                         double* gB, int64_t n); \
    /* convolution, NHWC activations, (kh,kw,ci,co) weights */ \
    void conv2d(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, \
                int64_t kh, int64_t kw, int64_t co, const double* bias, int64_t pad, \
                double* out); \
    void conv2d_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, \
                       const double* wt, int64_t kh, int64_t kw, int64_t co, int64_t pad, \
                       double* gin); \
    void conv2d_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, \
                        int64_t ci, int64_t kh, int64_t kw, int64_t co, int64_t pad, \
                        double* gwt); \
    /* transposed conv, kernel 3 stride 3 (exact 3x upsample, no overlap) */ \
    void convt3(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, \
                int64_t co, const double* bias, double* out); \
    void convt3_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, \
                       const double* wt, int64_t co, double* gin); \
    void convt3_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, \
                        int64_t ci, int64_t co, double* gwt); \
    /* multilinear grid interpolation: p (n,3) -> out (n, levels*feat) */ \
    void grid_fwd(const double* table, const double* p, const GridSpec& g, int64_t n, \
                  double* out); \
    void grid_bwd_p(const double* table, const double* p, const GridSpec& g, int64_t n, \
                    const double* gout, double* gp);

namespace serial {
NFF_KERNEL_DECLS
}
namespace par {
NFF_KERNEL_DECLS
}
NFF_KERNEL_DECLS

#undef NFF_KERNEL_DECLS

// Scatter-add is order-sensitive; contributions are applied serially in index
// order in both variants, so there is a single implementation.
void scatter_add_rows(double* dst, int64_t dst_rows, int64_t cols, const int64_t* idx,
                      const double* contrib, int64_t n);

// Table gradient of grid interpolation: accumulates into gtable in a fixed
// serial sample order (scatter, single implementation).
void grid_bwd_table(const double* p, const GridSpec& g, int64_t n, const double* gout,
                    double* gtable);

} // namespace nff::kernels
