// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <vector>

#include "nff/common.hpp"

namespace nff::kernels {

namespace {

std::atomic<bool> g_parallel{true};
constexpr int64_t kParMin = 1 << 12;

// Shared inner loops. Serial and par variants both go through these, so the
// per-element floating point order is identical in every schedule.

inline double dot(const double* a, const double* b, int64_t k) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int64_t i = 0;
    for (; i + 4 <= k; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < k; ++i) s += a[i] * b[i];
    return s;
}

inline double sum_range(const double* x, int64_t lo, int64_t hi) {
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += x[i];
    return s;
}

// Runs body(lo, hi) over [0, n). Par splits into kChunk ranges; chunk results
// must be order-independent (elementwise writes only).
template <bool Par, class F>
inline void for_ranges(int64_t n, F body) {
    if constexpr (Par) {
        int64_t nchunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
        for (int64_t c = 0; c < nchunks; ++c) body(c * kChunk, std::min(n, (c + 1) * kChunk));
    } else {
        body(0, n);
    }
}

template <bool Par, class F>
inline void for_index(int64_t n, F body) {
    if constexpr (Par) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) body(i);
    } else {
        for (int64_t i = 0; i < n; ++i) body(i);
    }
}

constexpr int kMaxChan = 256; // stack accumulator bound for conv channel loops

} // namespace

void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }
bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) {
    NFF_CHECK(n >= 1, ErrKind::config, "thread count must be >= 1");
    omp_set_num_threads(n);
}

// ---------------------------------------------------------------------------
// Implementations, templated on parallelism.

namespace impl {

template <bool Par>
void vadd(const double* a, const double* b, double* out, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) out[i] = a[i] + b[i];
    });
}

template <bool Par>
void vsub(const double* a, const double* b, double* out, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) out[i] = a[i] - b[i];
    });
}

template <bool Par>
void vmul(const double* a, const double* b, double* out, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) out[i] = a[i] * b[i];
    });
}

template <bool Par>
void vmuladd(const double* a, const double* b, double* acc, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) acc[i] += a[i] * b[i];
    });
}

template <bool Par>
void vscale(const double* a, double s, double* out, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) out[i] = a[i] * s;
    });
}

template <bool Par>
void vshift(const double* a, double s, double* out, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) out[i] = a[i] + s;
    });
}

template <bool Par>
void vaxpy(double a, const double* x, double* y, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] += a * x[i];
    });
}

template <bool Par>
void sigmoid(const double* x, double* y, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            double v = x[i];
            if (v >= 0.0) {
                y[i] = 1.0 / (1.0 + std::exp(-v));
            } else {
                double e = std::exp(v);
                y[i] = e / (1.0 + e);
            }
        }
    });
}

template <bool Par>
void sigmoid_bwd(const double* y, const double* gy, double* gx, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
    });
}

template <bool Par>
void relu(const double* x, double* y, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    });
}

template <bool Par>
void relu_bwd(const double* x, const double* gy, double* gx, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) gx[i] += x[i] > 0.0 ? gy[i] : 0.0;
    });
}

template <bool Par>
void vexp(const double* x, double* y, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = std::exp(x[i]);
    });
}

template <bool Par>
void vexp_bwd(const double* y, const double* gy, double* gx, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) gx[i] += gy[i] * y[i];
    });
}

template <bool Par>
void vlog_eps(const double* x, double* y, int64_t n, double eps) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = std::log(x[i] + eps);
    });
}

template <bool Par>
void vlog_eps_bwd(const double* x, const double* gy, double* gx, int64_t n, double eps) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) gx[i] += gy[i] / (x[i] + eps);
    });
}

template <bool Par>
void softplus(const double* x, double* y, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            double v = x[i];
            if (v > 30.0)
                y[i] = v;
            else if (v < -30.0)
                y[i] = std::exp(v);
            else
                y[i] = std::log1p(std::exp(v));
        }
    });
}

template <bool Par>
void softplus_bwd(const double* x, const double* gy, double* gx, int64_t n) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            double v = x[i];
            double s;
            if (v >= 0.0) {
                s = 1.0 / (1.0 + std::exp(-v));
            } else {
                double e = std::exp(v);
                s = e / (1.0 + e);
            }
            gx[i] += gy[i] * s;
        }
    });
}

template <bool Par>
void vpow(const double* x, double* y, int64_t n, double p) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = std::pow(x[i], p);
    });
}

template <bool Par>
void vpow_bwd(const double* x, const double* gy, double* gx, int64_t n, double p) {
    for_ranges<Par>(n, [=](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) gx[i] += gy[i] * p * std::pow(x[i], p - 1.0);
    });
}

template <bool Par>
double reduce_sum(const double* x, int64_t n) {
    int64_t nchunks = (n + kChunk - 1) / kChunk;
    if (nchunks <= 1) return sum_range(x, 0, n);
    std::vector<double> partial(static_cast<size_t>(nchunks));
    for_index<Par>(nchunks, [&](int64_t c) {
        partial[static_cast<size_t>(c)] = sum_range(x, c * kChunk, std::min(n, (c + 1) * kChunk));
    });
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

template <bool Par>
void colsum(const double* x, int64_t rows, int64_t cols, double* out) {
    NFF_ASSERT(cols >= 1, "colsum needs cols >= 1");
    int64_t chunk_rows = std::max<int64_t>(1, kChunk / cols);
    int64_t nchunks = (rows + chunk_rows - 1) / chunk_rows;
    std::vector<double> partial(static_cast<size_t>(nchunks * cols), 0.0);
    for_index<Par>(nchunks, [&](int64_t c) {
        double* acc = partial.data() + c * cols;
        int64_t hi = std::min(rows, (c + 1) * chunk_rows);
        for (int64_t r = c * chunk_rows; r < hi; ++r) {
            const double* row = x + r * cols;
            for (int64_t j = 0; j < cols; ++j) acc[j] += row[j];
        }
    });
    std::fill(out, out + cols, 0.0);
    for (int64_t c = 0; c < nchunks; ++c) {
        const double* acc = partial.data() + c * cols;
        for (int64_t j = 0; j < cols; ++j) out[j] += acc[j];
    }
}

template <bool Par>
void rowsum(const double* x, int64_t rows, int64_t cols, double* out) {
    for_index<Par>(rows, [=](int64_t r) { out[r] = sum_range(x + r * cols, 0, cols); });
}

template <bool Par>
void matmul_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N,
               bool accumulate) {
    // Pack B transposed so both operand rows are contiguous in the dot.
    std::vector<double> Bt(static_cast<size_t>(N * K));
    for (int64_t k = 0; k < K; ++k)
        for (int64_t j = 0; j < N; ++j) Bt[static_cast<size_t>(j * K + k)] = B[k * N + j];
    const double* bt = Bt.data();
    for_index<Par>(M, [=](int64_t m) {
        const double* a = A + m * K;
        double* c = C + m * N;
        for (int64_t j = 0; j < N; ++j) {
            double d = dot(a, bt + j * K, K);
            c[j] = accumulate ? c[j] + d : d;
        }
    });
}

template <bool Par>
void matmul_abt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K,
                bool accumulate) {
    // A is (M,N), B is (K,N), C is (M,K) = A * B^T. Both rows contiguous.
    for_index<Par>(M, [=](int64_t m) {
        const double* a = A + m * N;
        double* c = C + m * K;
        for (int64_t k = 0; k < K; ++k) {
            double d = dot(a, B + k * N, N);
            c[k] = accumulate ? c[k] + d : d;
        }
    });
}

template <bool Par>
void matmul_atb(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N,
                bool accumulate) {
    // A is (M,K), B is (M,N), C is (K,N) = A^T * B. Reduction over M runs in
    // canonical kChunk blocks of rows.
    int64_t nchunks = (M + kChunk - 1) / kChunk;
    std::vector<double> partial(static_cast<size_t>(nchunks * K * N), 0.0);
    for_index<Par>(nchunks, [&](int64_t c) {
        double* acc = partial.data() + c * K * N;
        int64_t hi = std::min(M, (c + 1) * kChunk);
        for (int64_t m = c * kChunk; m < hi; ++m) {
            const double* a = A + m * K;
            const double* b = B + m * N;
            for (int64_t k = 0; k < K; ++k) {
                double av = a[k];
                double* row = acc + k * N;
                for (int64_t j = 0; j < N; ++j) row[j] += av * b[j];
            }
        }
    });
    if (!accumulate) std::fill(C, C + K * N, 0.0);
    for (int64_t c = 0; c < nchunks; ++c) {
        const double* acc = partial.data() + c * K * N;
        for (int64_t i = 0; i < K * N; ++i) C[i] += acc[i];
    }
}

template <bool Par>
void gather_rows(const double* src, int64_t src_rows, int64_t cols, const int64_t* idx, int64_t n,
                 double* out) {
    for_index<Par>(n, [=](int64_t i) {
        int64_t r = idx[i];
        NFF_ASSERT(r >= 0 && r < src_rows, "gather_rows index out of range");
        std::memcpy(out + i * cols, src + r * cols, sizeof(double) * static_cast<size_t>(cols));
    });
}

template <bool Par>
void scale_rows(const double* x, const double* s, double* out, int64_t rows, int64_t cols) {
    for_index<Par>(rows, [=](int64_t r) {
        double v = s[r];
        const double* xr = x + r * cols;
        double* o = out + r * cols;
        for (int64_t j = 0; j < cols; ++j) o[j] = xr[j] * v;
    });
}

template <bool Par>
void scale_rows_bwd_s(const double* x, const double* gy, double* gs, int64_t rows, int64_t cols) {
    for_index<Par>(rows, [=](int64_t r) { gs[r] += dot(x + r * cols, gy + r * cols, cols); });
}

template <bool Par>
void group_sum_rows(const double* x, int64_t out_rows, int64_t group, int64_t cols, double* out) {
    for_index<Par>(out_rows, [=](int64_t i) {
        double* o = out + i * cols;
        const double* base = x + i * group * cols;
        for (int64_t j = 0; j < cols; ++j) o[j] = base[j];
        for (int64_t g = 1; g < group; ++g) {
            const double* row = base + g * cols;
            for (int64_t j = 0; j < cols; ++j) o[j] += row[j];
        }
    });
}

template <bool Par>
void rot_apply(const double* R, const double* x, double* y, int64_t n) {
    for_index<Par>(n, [=](int64_t i) {
        const double* r = R + i * 9;
        const double* v = x + i * 3;
        double* o = y + i * 3;
        o[0] = r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
        o[1] = r[3] * v[0] + r[4] * v[1] + r[5] * v[2];
        o[2] = r[6] * v[0] + r[7] * v[1] + r[8] * v[2];
    });
}

template <bool Par>
void rot_apply_bwd(const double* R, const double* x, const double* gy, double* gR, double* gx,
                   int64_t n) {
    for_index<Par>(n, [=](int64_t i) {
        const double* r = R + i * 9;
        const double* v = x + i * 3;
        const double* g = gy + i * 3;
        if (gx) {
            double* o = gx + i * 3;
            o[0] += r[0] * g[0] + r[3] * g[1] + r[6] * g[2];
            o[1] += r[1] * g[0] + r[4] * g[1] + r[7] * g[2];
            o[2] += r[2] * g[0] + r[5] * g[1] + r[8] * g[2];
        }
        if (gR) {
            double* gr = gR + i * 9;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) gr[a * 3 + b] += g[a] * v[b];
        }
    });
}

template <bool Par>
void rot_compose(const double* A, const double* B, double* C, int64_t n) {
    for_index<Par>(n, [=](int64_t i) {
        const double* a = A + i * 9;
        const double* b = B + i * 9;
        double* c = C + i * 9;
        for (int r = 0; r < 3; ++r)
            for (int j = 0; j < 3; ++j)
                c[r * 3 + j] =
                    a[r * 3] * b[j] + a[r * 3 + 1] * b[3 + j] + a[r * 3 + 2] * b[6 + j];
    });
}

template <bool Par>
void rot_compose_bwd(const double* A, const double* B, const double* gC, double* gA, double* gB,
                     int64_t n) {
    // gA = gC * B^T, gB = A^T * gC, per row
    for_index<Par>(n, [=](int64_t i) {
        const double* a = A + i * 9;
        const double* b = B + i * 9;
        const double* g = gC + i * 9;
        if (gA) {
            double* ga = gA + i * 9;
            for (int r = 0; r < 3; ++r)
                for (int j = 0; j < 3; ++j)
                    ga[r * 3 + j] +=
                        g[r * 3] * b[j * 3] + g[r * 3 + 1] * b[j * 3 + 1] + g[r * 3 + 2] * b[j * 3 + 2];
        }
        if (gB) {
            double* gb = gB + i * 9;
            for (int r = 0; r < 3; ++r)
                for (int j = 0; j < 3; ++j)
                    gb[r * 3 + j] +=
                        a[r] * g[j] + a[3 + r] * g[3 + j] + a[6 + r] * g[6 + j];
        }
    });
}

template <bool Par>
void conv2d(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt,
            int64_t kh, int64_t kw, int64_t co, const double* bias, int64_t pad, double* out) {
    NFF_ASSERT(co <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t ho = h + 2 * pad - kh + 1;
    int64_t wo = w + 2 * pad - kw + 1;
    NFF_ASSERT(ho >= 1 && wo >= 1, "conv output is empty");
    for_index<Par>(n * ho * wo, [=](int64_t px) {
        int64_t b = px / (ho * wo);
        int64_t yo = (px / wo) % ho;
        int64_t xo = px % wo;
        double acc[kMaxChan];
        for (int64_t c = 0; c < co; ++c) acc[c] = bias ? bias[c] : 0.0;
        for (int64_t dy = 0; dy < kh; ++dy) {
            int64_t yi = yo + dy - pad;
            if (yi < 0 || yi >= h) continue;
            for (int64_t dx = 0; dx < kw; ++dx) {
                int64_t xi = xo + dx - pad;
                if (xi < 0 || xi >= w) continue;
                const double* ip = in + ((b * h + yi) * w + xi) * ci;
                const double* wp = wt + (dy * kw + dx) * ci * co;
                for (int64_t c_i = 0; c_i < ci; ++c_i) {
                    double v = ip[c_i];
                    const double* wr = wp + c_i * co;
                    for (int64_t c = 0; c < co; ++c) acc[c] += v * wr[c];
                }
            }
        }
        double* op = out + px * co;
        for (int64_t c = 0; c < co; ++c) op[c] = acc[c];
    });
}

template <bool Par>
void conv2d_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci,
                   const double* wt, int64_t kh, int64_t kw, int64_t co, int64_t pad,
                   double* gin) {
    NFF_ASSERT(ci <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t ho = h + 2 * pad - kh + 1;
    int64_t wo = w + 2 * pad - kw + 1;
    for_index<Par>(n * h * w, [=](int64_t px) {
        int64_t b = px / (h * w);
        int64_t yi = (px / w) % h;
        int64_t xi = px % w;
        double acc[kMaxChan];
        for (int64_t c = 0; c < ci; ++c) acc[c] = 0.0;
        for (int64_t dy = 0; dy < kh; ++dy) {
            int64_t yo = yi - dy + pad;
            if (yo < 0 || yo >= ho) continue;
            for (int64_t dx = 0; dx < kw; ++dx) {
                int64_t xo = xi - dx + pad;
                if (xo < 0 || xo >= wo) continue;
                const double* gr = gout + ((b * ho + yo) * wo + xo) * co;
                const double* wp = wt + (dy * kw + dx) * ci * co;
                for (int64_t c_i = 0; c_i < ci; ++c_i) acc[c_i] += dot(wp + c_i * co, gr, co);
            }
        }
        double* gp = gin + px * ci;
        for (int64_t c = 0; c < ci; ++c) gp[c] += acc[c];
    });
}

template <bool Par>
void conv2d_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w,
                    int64_t ci, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gwt) {
    NFF_ASSERT(co <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t ho = h + 2 * pad - kh + 1;
    int64_t wo = w + 2 * pad - kw + 1;
    // Each (dy,dx,ci) triple owns one gwt slice; batch/pixel order is fixed.
    for_index<Par>(kh * kw * ci, [=](int64_t t) {
        int64_t dy = t / (kw * ci);
        int64_t dx = (t / ci) % kw;
        int64_t c_i = t % ci;
        double acc[kMaxChan];
        for (int64_t c = 0; c < co; ++c) acc[c] = 0.0;
        for (int64_t b = 0; b < n; ++b) {
            for (int64_t yo = 0; yo < ho; ++yo) {
                int64_t yi = yo + dy - pad;
                if (yi < 0 || yi >= h) continue;
                for (int64_t xo = 0; xo < wo; ++xo) {
                    int64_t xi = xo + dx - pad;
                    if (xi < 0 || xi >= w) continue;
                    double v = in[((b * h + yi) * w + xi) * ci + c_i];
                    const double* gr = gout + ((b * ho + yo) * wo + xo) * co;
                    for (int64_t c = 0; c < co; ++c) acc[c] += v * gr[c];
                }
            }
        }
        double* gw = gwt + ((dy * kw + dx) * ci + c_i) * co;
        for (int64_t c = 0; c < co; ++c) gw[c] += acc[c];
    });
}

template <bool Par>
void convt3(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt,
            int64_t co, const double* bias, double* out) {
    NFF_ASSERT(co <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t ho = 3 * h, wo = 3 * w;
    for_index<Par>(n * ho * wo, [=](int64_t px) {
        int64_t b = px / (ho * wo);
        int64_t yo = (px / wo) % ho;
        int64_t xo = px % wo;
        int64_t y = yo / 3, dy = yo % 3;
        int64_t x = xo / 3, dx = xo % 3;
        const double* ip = in + ((b * h + y) * w + x) * ci;
        const double* wp = wt + (dy * 3 + dx) * ci * co;
        double acc[kMaxChan];
        for (int64_t c = 0; c < co; ++c) acc[c] = bias ? bias[c] : 0.0;
        for (int64_t c_i = 0; c_i < ci; ++c_i) {
            double v = ip[c_i];
            const double* wr = wp + c_i * co;
            for (int64_t c = 0; c < co; ++c) acc[c] += v * wr[c];
        }
        double* op = out + px * co;
        for (int64_t c = 0; c < co; ++c) op[c] = acc[c];
    });
}

template <bool Par>
void convt3_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci,
                   const double* wt, int64_t co, double* gin) {
    NFF_ASSERT(ci <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t wo = 3 * w;
    for_index<Par>(n * h * w, [=](int64_t px) {
        int64_t b = px / (h * w);
        int64_t y = (px / w) % h;
        int64_t x = px % w;
        double acc[kMaxChan];
        for (int64_t c = 0; c < ci; ++c) acc[c] = 0.0;
        for (int64_t dy = 0; dy < 3; ++dy) {
            for (int64_t dx = 0; dx < 3; ++dx) {
                const double* gr = gout + ((b * 3 * h + 3 * y + dy) * wo + 3 * x + dx) * co;
                const double* wp = wt + (dy * 3 + dx) * ci * co;
                for (int64_t c_i = 0; c_i < ci; ++c_i) acc[c_i] += dot(wp + c_i * co, gr, co);
            }
        }
        double* gp = gin + px * ci;
        for (int64_t c = 0; c < ci; ++c) gp[c] += acc[c];
    });
}

template <bool Par>
void convt3_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w,
                    int64_t ci, int64_t co, double* gwt) {
    NFF_ASSERT(co <= kMaxChan, "conv channel count exceeds kernel bound");
    int64_t wo = 3 * w;
    for_index<Par>(9 * ci, [=](int64_t t) {
        int64_t dy = t / (3 * ci);
        int64_t dx = (t / ci) % 3;
        int64_t c_i = t % ci;
        double acc[kMaxChan];
        for (int64_t c = 0; c < co; ++c) acc[c] = 0.0;
        for (int64_t b = 0; b < n; ++b) {
            for (int64_t y = 0; y < h; ++y) {
                for (int64_t x = 0; x < w; ++x) {
                    double v = in[((b * h + y) * w + x) * ci + c_i];
                    const double* gr = gout + ((b * 3 * h + 3 * y + dy) * wo + 3 * x + dx) * co;
                    for (int64_t c = 0; c < co; ++c) acc[c] += v * gr[c];
                }
            }
        }
        double* gw = gwt + ((dy * 3 + dx) * ci + c_i) * co;
        for (int64_t c = 0; c < co; ++c) gw[c] += acc[c];
    });
}

// ---------------------------------------------------------------------------
// Multiresolution grid interpolation.

inline int64_t grid_row(const GridSpec& g, int64_t l, int64_t vx, int64_t vy, int64_t vz,
                        int64_t a) {
    if (g.dense[l]) {
        int64_t vpa = g.res[l] + 1;
        return g.row_off[l] + ((a * vpa + vx) * vpa + vy) * vpa + vz;
    }
    uint64_t h = static_cast<uint64_t>(vx) * 2654435761ull ^
                 static_cast<uint64_t>(vy) * 805459861ull ^
                 static_cast<uint64_t>(vz) * 3674653429ull ^
                 static_cast<uint64_t>(a) * 2097192037ull;
    return g.row_off[l] + static_cast<int64_t>(h & static_cast<uint64_t>(g.rows[l] - 1));
}

struct GridCell {
    int64_t c[3];
    double f[3];
};

inline GridCell grid_cell(const double* pi, int64_t res) {
    GridCell out;
    for (int a = 0; a < 3; ++a) {
        double pa = pi[a] < 0.0 ? 0.0 : (pi[a] > 1.0 ? 1.0 : pi[a]);
        double sc = pa * static_cast<double>(res);
        int64_t c = static_cast<int64_t>(sc);
        if (c >= res) c = res - 1;
        out.c[a] = c;
        out.f[a] = sc - static_cast<double>(c);
    }
    return out;
}

template <bool Par>
void grid_fwd(const double* table, const double* p, const GridSpec& g, int64_t n, double* out) {
    int64_t L = g.levels, F = g.feat;
    for_index<Par>(n, [=](int64_t i) {
        int64_t a = g.actor ? g.actor[i] : 0;
        double* orow = out + i * L * F;
        for (int64_t l = 0; l < L; ++l) {
            GridCell cc = grid_cell(p + 3 * i, g.res[l]);
            double* of = orow + l * F;
            for (int64_t f = 0; f < F; ++f) of[f] = 0.0;
            for (int corner = 0; corner < 8; ++corner) {
                int bx = corner >> 2 & 1, by = corner >> 1 & 1, bz = corner & 1;
                double w = (bx ? cc.f[0] : 1.0 - cc.f[0]) * (by ? cc.f[1] : 1.0 - cc.f[1]) *
                           (bz ? cc.f[2] : 1.0 - cc.f[2]);
                const double* tr =
                    table + grid_row(g, l, cc.c[0] + bx, cc.c[1] + by, cc.c[2] + bz, a) * F;
                for (int64_t f = 0; f < F; ++f) of[f] += w * tr[f];
            }
        }
    });
}

// Gradient w.r.t. the query point. Piecewise constant parts (cell choice,
// clamping) contribute zero, matching the a.e. derivative.
template <bool Par>
void grid_bwd_p(const double* table, const double* p, const GridSpec& g, int64_t n,
                const double* gout, double* gp) {
    int64_t L = g.levels, F = g.feat;
    for_index<Par>(n, [=](int64_t i) {
        int64_t a = g.actor ? g.actor[i] : 0;
        const double* grow = gout + i * L * F;
        double acc[3] = {0, 0, 0};
        for (int64_t l = 0; l < L; ++l) {
            GridCell cc = grid_cell(p + 3 * i, g.res[l]);
            const double* gf = grow + l * F;
            double r = static_cast<double>(g.res[l]);
            for (int corner = 0; corner < 8; ++corner) {
                int b[3] = {corner >> 2 & 1, corner >> 1 & 1, corner & 1};
                const double* tr =
                    table + grid_row(g, l, cc.c[0] + b[0], cc.c[1] + b[1], cc.c[2] + b[2], a) * F;
                double dot = 0.0;
                for (int64_t f = 0; f < F; ++f) dot += tr[f] * gf[f];
                for (int ax = 0; ax < 3; ++ax) {
                    double wothers = 1.0;
                    for (int o = 0; o < 3; ++o)
                        if (o != ax) wothers *= b[o] ? cc.f[o] : 1.0 - cc.f[o];
                    acc[ax] += (b[ax] ? 1.0 : -1.0) * r * wothers * dot;
                }
            }
        }
        for (int ax = 0; ax < 3; ++ax) gp[3 * i + ax] += acc[ax];
    });
}

} // namespace impl

// ---------------------------------------------------------------------------
// Ordered scatter-add: contributions are applied in index order regardless of
// how they were produced, so the result is schedule-independent.

void scatter_add_rows(double* dst, int64_t dst_rows, int64_t cols, const int64_t* idx,
                      const double* contrib, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        int64_t r = idx[i];
        NFF_ASSERT(r >= 0 && r < dst_rows, "scatter_add_rows index out of range");
        double* d = dst + r * cols;
        const double* c = contrib + i * cols;
        for (int64_t j = 0; j < cols; ++j) d[j] += c[j];
    }
}

// Table gradient of grid interpolation. Hash collisions make rows shared
// between arbitrary samples, so accumulation runs in a fixed serial order.
void grid_bwd_table(const double* p, const GridSpec& g, int64_t n, const double* gout,
                    double* gtable) {
    int64_t L = g.levels, F = g.feat;
    for (int64_t i = 0; i < n; ++i) {
        int64_t a = g.actor ? g.actor[i] : 0;
        const double* grow = gout + i * L * F;
        for (int64_t l = 0; l < L; ++l) {
            impl::GridCell cc = impl::grid_cell(p + 3 * i, g.res[l]);
            const double* gf = grow + l * F;
            for (int corner = 0; corner < 8; ++corner) {
                int bx = corner >> 2 & 1, by = corner >> 1 & 1, bz = corner & 1;
                double w = (bx ? cc.f[0] : 1.0 - cc.f[0]) * (by ? cc.f[1] : 1.0 - cc.f[1]) *
                           (bz ? cc.f[2] : 1.0 - cc.f[2]);
                double* gt =
                    gtable +
                    impl::grid_row(g, l, cc.c[0] + bx, cc.c[1] + by, cc.c[2] + bz, a) * F;
                for (int64_t f = 0; f < F; ++f) gt[f] += w * gf[f];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Instantiation + dispatch boilerplate.

namespace {
inline bool go_par(int64_t n) {
    return g_parallel.load(std::memory_order_relaxed) && n >= kParMin && omp_get_max_threads() > 1;
}
} // namespace

#define NFF_DISPATCH(fn, size_expr, call_args) \
    if (go_par(size_expr)) \
        par::fn call_args; \
    else \
        serial::fn call_args;

namespace serial {
void vadd(const double* a, const double* b, double* out, int64_t n) { impl::vadd<false>(a, b, out, n); }
void vsub(const double* a, const double* b, double* out, int64_t n) { impl::vsub<false>(a, b, out, n); }
void vmul(const double* a, const double* b, double* out, int64_t n) { impl::vmul<false>(a, b, out, n); }
void vmuladd(const double* a, const double* b, double* acc, int64_t n) { impl::vmuladd<false>(a, b, acc, n); }
void vscale(const double* a, double s, double* out, int64_t n) { impl::vscale<false>(a, s, out, n); }
void vshift(const double* a, double s, double* out, int64_t n) { impl::vshift<false>(a, s, out, n); }
void vaxpy(double a, const double* x, double* y, int64_t n) { impl::vaxpy<false>(a, x, y, n); }
void sigmoid(const double* x, double* y, int64_t n) { impl::sigmoid<false>(x, y, n); }
void sigmoid_bwd(const double* y, const double* gy, double* gx, int64_t n) { impl::sigmoid_bwd<false>(y, gy, gx, n); }
void relu(const double* x, double* y, int64_t n) { impl::relu<false>(x, y, n); }
void relu_bwd(const double* x, const double* gy, double* gx, int64_t n) { impl::relu_bwd<false>(x, gy, gx, n); }
void vexp(const double* x, double* y, int64_t n) { impl::vexp<false>(x, y, n); }
void vexp_bwd(const double* y, const double* gy, double* gx, int64_t n) { impl::vexp_bwd<false>(y, gy, gx, n); }
void vlog_eps(const double* x, double* y, int64_t n, double eps) { impl::vlog_eps<false>(x, y, n, eps); }
void vlog_eps_bwd(const double* x, const double* gy, double* gx, int64_t n, double eps) { impl::vlog_eps_bwd<false>(x, gy, gx, n, eps); }
void softplus(const double* x, double* y, int64_t n) { impl::softplus<false>(x, y, n); }
void softplus_bwd(const double* x, const double* gy, double* gx, int64_t n) { impl::softplus_bwd<false>(x, gy, gx, n); }
void vpow(const double* x, double* y, int64_t n, double p) { impl::vpow<false>(x, y, n, p); }
void vpow_bwd(const double* x, const double* gy, double* gx, int64_t n, double p) { impl::vpow_bwd<false>(x, gy, gx, n, p); }
double reduce_sum(const double* x, int64_t n) { return impl::reduce_sum<false>(x, n); }
void colsum(const double* x, int64_t rows, int64_t cols, double* out) { impl::colsum<false>(x, rows, cols, out); }
void rowsum(const double* x, int64_t rows, int64_t cols, double* out) { impl::rowsum<false>(x, rows, cols, out); }
void matmul_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { impl::matmul_nn<false>(A, B, C, M, K, N, acc); }
void matmul_abt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K, bool acc) { impl::matmul_abt<false>(A, B, C, M, N, K, acc); }
void matmul_atb(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { impl::matmul_atb<false>(A, B, C, M, K, N, acc); }
void gather_rows(const double* src, int64_t src_rows, int64_t cols, const int64_t* idx, int64_t n, double* out) { impl::gather_rows<false>(src, src_rows, cols, idx, n, out); }
void scale_rows(const double* x, const double* s, double* out, int64_t rows, int64_t cols) { impl::scale_rows<false>(x, s, out, rows, cols); }
void scale_rows_bwd_s(const double* x, const double* gy, double* gs, int64_t rows, int64_t cols) { impl::scale_rows_bwd_s<false>(x, gy, gs, rows, cols); }
void group_sum_rows(const double* x, int64_t out_rows, int64_t group, int64_t cols, double* out) { impl::group_sum_rows<false>(x, out_rows, group, cols, out); }
void rot_apply(const double* R, const double* x, double* y, int64_t n) { impl::rot_apply<false>(R, x, y, n); }
void rot_apply_bwd(const double* R, const double* x, const double* gy, double* gR, double* gx, int64_t n) { impl::rot_apply_bwd<false>(R, x, gy, gR, gx, n); }
void rot_compose(const double* A, const double* B, double* C, int64_t n) { impl::rot_compose<false>(A, B, C, n); }
void rot_compose_bwd(const double* A, const double* B, const double* gC, double* gA, double* gB, int64_t n) { impl::rot_compose_bwd<false>(A, B, gC, gA, gB, n); }
void conv2d(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, const double* bias, int64_t pad, double* out) { impl::conv2d<false>(in, n, h, w, ci, wt, kh, kw, co, bias, pad, out); }
void conv2d_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gin) { impl::conv2d_dinput<false>(gout, n, h, w, ci, wt, kh, kw, co, pad, gin); }
void conv2d_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gwt) { impl::conv2d_dweight<false>(in, gout, n, h, w, ci, kh, kw, co, pad, gwt); }
void convt3(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, const double* bias, double* out) { impl::convt3<false>(in, n, h, w, ci, wt, co, bias, out); }
void convt3_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, double* gin) { impl::convt3_dinput<false>(gout, n, h, w, ci, wt, co, gin); }
void convt3_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t co, double* gwt) { impl::convt3_dweight<false>(in, gout, n, h, w, ci, co, gwt); }
void grid_fwd(const double* table, const double* p, const GridSpec& g, int64_t n, double* out) { impl::grid_fwd<false>(table, p, g, n, out); }
void grid_bwd_p(const double* table, const double* p, const GridSpec& g, int64_t n, const double* gout, double* gp) { impl::grid_bwd_p<false>(table, p, g, n, gout, gp); }
} // namespace serial

namespace par {
void vadd(const double* a, const double* b, double* out, int64_t n) { impl::vadd<true>(a, b, out, n); }
void vsub(const double* a, const double* b, double* out, int64_t n) { impl::vsub<true>(a, b, out, n); }
void vmul(const double* a, const double* b, double* out, int64_t n) { impl::vmul<true>(a, b, out, n); }
void vmuladd(const double* a, const double* b, double* acc, int64_t n) { impl::vmuladd<true>(a, b, acc, n); }
void vscale(const double* a, double s, double* out, int64_t n) { impl::vscale<true>(a, s, out, n); }
void vshift(const double* a, double s, double* out, int64_t n) { impl::vshift<true>(a, s, out, n); }
void vaxpy(double a, const double* x, double* y, int64_t n) { impl::vaxpy<true>(a, x, y, n); }
void sigmoid(const double* x, double* y, int64_t n) { impl::sigmoid<true>(x, y, n); }
void sigmoid_bwd(const double* y, const double* gy, double* gx, int64_t n) { impl::sigmoid_bwd<true>(y, gy, gx, n); }
void relu(const double* x, double* y, int64_t n) { impl::relu<true>(x, y, n); }
void relu_bwd(const double* x, const double* gy, double* gx, int64_t n) { impl::relu_bwd<true>(x, gy, gx, n); }
void vexp(const double* x, double* y, int64_t n) { impl::vexp<true>(x, y, n); }
void vexp_bwd(const double* y, const double* gy, double* gx, int64_t n) { impl::vexp_bwd<true>(y, gy, gx, n); }
void vlog_eps(const double* x, double* y, int64_t n, double eps) { impl::vlog_eps<true>(x, y, n, eps); }
void vlog_eps_bwd(const double* x, const double* gy, double* gx, int64_t n, double eps) { impl::vlog_eps_bwd<true>(x, gy, gx, n, eps); }
void softplus(const double* x, double* y, int64_t n) { impl::softplus<true>(x, y, n); }
void softplus_bwd(const double* x, const double* gy, double* gx, int64_t n) { impl::softplus_bwd<true>(x, gy, gx, n); }
void vpow(const double* x, double* y, int64_t n, double p) { impl::vpow<true>(x, y, n, p); }
void vpow_bwd(const double* x, const double* gy, double* gx, int64_t n, double p) { impl::vpow_bwd<true>(x, gy, gx, n, p); }
double reduce_sum(const double* x, int64_t n) { return impl::reduce_sum<true>(x, n); }
void colsum(const double* x, int64_t rows, int64_t cols, double* out) { impl::colsum<true>(x, rows, cols, out); }
void rowsum(const double* x, int64_t rows, int64_t cols, double* out) { impl::rowsum<true>(x, rows, cols, out); }
void matmul_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { impl::matmul_nn<true>(A, B, C, M, K, N, acc); }
void matmul_abt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K, bool acc) { impl::matmul_abt<true>(A, B, C, M, N, K, acc); }
void matmul_atb(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { impl::matmul_atb<true>(A, B, C, M, K, N, acc); }
void gather_rows(const double* src, int64_t src_rows, int64_t cols, const int64_t* idx, int64_t n, double* out) { impl::gather_rows<true>(src, src_rows, cols, idx, n, out); }
void scale_rows(const double* x, const double* s, double* out, int64_t rows, int64_t cols) { impl::scale_rows<true>(x, s, out, rows, cols); }
void scale_rows_bwd_s(const double* x, const double* gy, double* gs, int64_t rows, int64_t cols) { impl::scale_rows_bwd_s<true>(x, gy, gs, rows, cols); }
void group_sum_rows(const double* x, int64_t out_rows, int64_t group, int64_t cols, double* out) { impl::group_sum_rows<true>(x, out_rows, group, cols, out); }
void rot_apply(const double* R, const double* x, double* y, int64_t n) { impl::rot_apply<true>(R, x, y, n); }
void rot_apply_bwd(const double* R, const double* x, const double* gy, double* gR, double* gx, int64_t n) { impl::rot_apply_bwd<true>(R, x, gy, gR, gx, n); }
void rot_compose(const double* A, const double* B, double* C, int64_t n) { impl::rot_compose<true>(A, B, C, n); }
void rot_compose_bwd(const double* A, const double* B, const double* gC, double* gA, double* gB, int64_t n) { impl::rot_compose_bwd<true>(A, B, gC, gA, gB, n); }
void conv2d(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, const double* bias, int64_t pad, double* out) { impl::conv2d<true>(in, n, h, w, ci, wt, kh, kw, co, bias, pad, out); }
void conv2d_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gin) { impl::conv2d_dinput<true>(gout, n, h, w, ci, wt, kh, kw, co, pad, gin); }
void conv2d_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gwt) { impl::conv2d_dweight<true>(in, gout, n, h, w, ci, kh, kw, co, pad, gwt); }
void convt3(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, const double* bias, double* out) { impl::convt3<true>(in, n, h, w, ci, wt, co, bias, out); }
void convt3_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, double* gin) { impl::convt3_dinput<true>(gout, n, h, w, ci, wt, co, gin); }
void convt3_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t co, double* gwt) { impl::convt3_dweight<true>(in, gout, n, h, w, ci, co, gwt); }
void grid_fwd(const double* table, const double* p, const GridSpec& g, int64_t n, double* out) { impl::grid_fwd<true>(table, p, g, n, out); }
void grid_bwd_p(const double* table, const double* p, const GridSpec& g, int64_t n, const double* gout, double* gp) { impl::grid_bwd_p<true>(table, p, g, n, gout, gp); }
} // namespace par

void vadd(const double* a, const double* b, double* out, int64_t n) { NFF_DISPATCH(vadd, n, (a, b, out, n)) }
void vsub(const double* a, const double* b, double* out, int64_t n) { NFF_DISPATCH(vsub, n, (a, b, out, n)) }
void vmul(const double* a, const double* b, double* out, int64_t n) { NFF_DISPATCH(vmul, n, (a, b, out, n)) }
void vmuladd(const double* a, const double* b, double* acc, int64_t n) { NFF_DISPATCH(vmuladd, n, (a, b, acc, n)) }
void vscale(const double* a, double s, double* out, int64_t n) { NFF_DISPATCH(vscale, n, (a, s, out, n)) }
void vshift(const double* a, double s, double* out, int64_t n) { NFF_DISPATCH(vshift, n, (a, s, out, n)) }
void vaxpy(double a, const double* x, double* y, int64_t n) { NFF_DISPATCH(vaxpy, n, (a, x, y, n)) }
void sigmoid(const double* x, double* y, int64_t n) { NFF_DISPATCH(sigmoid, n, (x, y, n)) }
void sigmoid_bwd(const double* y, const double* gy, double* gx, int64_t n) { NFF_DISPATCH(sigmoid_bwd, n, (y, gy, gx, n)) }
void relu(const double* x, double* y, int64_t n) { NFF_DISPATCH(relu, n, (x, y, n)) }
void relu_bwd(const double* x, const double* gy, double* gx, int64_t n) { NFF_DISPATCH(relu_bwd, n, (x, gy, gx, n)) }
void vexp(const double* x, double* y, int64_t n) { NFF_DISPATCH(vexp, n, (x, y, n)) }
void vexp_bwd(const double* y, const double* gy, double* gx, int64_t n) { NFF_DISPATCH(vexp_bwd, n, (y, gy, gx, n)) }
void vlog_eps(const double* x, double* y, int64_t n, double eps) { NFF_DISPATCH(vlog_eps, n, (x, y, n, eps)) }
void vlog_eps_bwd(const double* x, const double* gy, double* gx, int64_t n, double eps) { NFF_DISPATCH(vlog_eps_bwd, n, (x, gy, gx, n, eps)) }
void softplus(const double* x, double* y, int64_t n) { NFF_DISPATCH(softplus, n, (x, y, n)) }
void softplus_bwd(const double* x, const double* gy, double* gx, int64_t n) { NFF_DISPATCH(softplus_bwd, n, (x, gy, gx, n)) }
void vpow(const double* x, double* y, int64_t n, double p) { NFF_DISPATCH(vpow, n, (x, y, n, p)) }
void vpow_bwd(const double* x, const double* gy, double* gx, int64_t n, double p) { NFF_DISPATCH(vpow_bwd, n, (x, gy, gx, n, p)) }
double reduce_sum(const double* x, int64_t n) {
    if (go_par(n)) return par::reduce_sum(x, n);
    return serial::reduce_sum(x, n);
}
void colsum(const double* x, int64_t rows, int64_t cols, double* out) { NFF_DISPATCH(colsum, rows* cols, (x, rows, cols, out)) }
void rowsum(const double* x, int64_t rows, int64_t cols, double* out) { NFF_DISPATCH(rowsum, rows* cols, (x, rows, cols, out)) }
void matmul_nn(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { NFF_DISPATCH(matmul_nn, M* K* N, (A, B, C, M, K, N, acc)) }
void matmul_abt(const double* A, const double* B, double* C, int64_t M, int64_t N, int64_t K, bool acc) { NFF_DISPATCH(matmul_abt, M* N* K, (A, B, C, M, N, K, acc)) }
void matmul_atb(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N, bool acc) { NFF_DISPATCH(matmul_atb, M* K* N, (A, B, C, M, K, N, acc)) }
void gather_rows(const double* src, int64_t src_rows, int64_t cols, const int64_t* idx, int64_t n, double* out) { NFF_DISPATCH(gather_rows, n* cols, (src, src_rows, cols, idx, n, out)) }
void scale_rows(const double* x, const double* s, double* out, int64_t rows, int64_t cols) { NFF_DISPATCH(scale_rows, rows* cols, (x, s, out, rows, cols)) }
void scale_rows_bwd_s(const double* x, const double* gy, double* gs, int64_t rows, int64_t cols) { NFF_DISPATCH(scale_rows_bwd_s, rows* cols, (x, gy, gs, rows, cols)) }
void group_sum_rows(const double* x, int64_t out_rows, int64_t group, int64_t cols, double* out) { NFF_DISPATCH(group_sum_rows, out_rows* group* cols, (x, out_rows, group, cols, out)) }
void rot_apply(const double* R, const double* x, double* y, int64_t n) { NFF_DISPATCH(rot_apply, n * 12, (R, x, y, n)) }
void rot_apply_bwd(const double* R, const double* x, const double* gy, double* gR, double* gx, int64_t n) { NFF_DISPATCH(rot_apply_bwd, n * 21, (R, x, gy, gR, gx, n)) }
void rot_compose(const double* A, const double* B, double* C, int64_t n) { NFF_DISPATCH(rot_compose, n * 27, (A, B, C, n)) }
void rot_compose_bwd(const double* A, const double* B, const double* gC, double* gA, double* gB, int64_t n) { NFF_DISPATCH(rot_compose_bwd, n * 54, (A, B, gC, gA, gB, n)) }
void conv2d(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, const double* bias, int64_t pad, double* out) { NFF_DISPATCH(conv2d, n* h* w* ci* co, (in, n, h, w, ci, wt, kh, kw, co, bias, pad, out)) }
void conv2d_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gin) { NFF_DISPATCH(conv2d_dinput, n* h* w* ci* co, (gout, n, h, w, ci, wt, kh, kw, co, pad, gin)) }
void conv2d_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t kh, int64_t kw, int64_t co, int64_t pad, double* gwt) { NFF_DISPATCH(conv2d_dweight, n* h* w* ci* co, (in, gout, n, h, w, ci, kh, kw, co, pad, gwt)) }
void convt3(const double* in, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, const double* bias, double* out) { NFF_DISPATCH(convt3, n* h* w* ci* co * 9, (in, n, h, w, ci, wt, co, bias, out)) }
void convt3_dinput(const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, const double* wt, int64_t co, double* gin) { NFF_DISPATCH(convt3_dinput, n* h* w* ci* co * 9, (gout, n, h, w, ci, wt, co, gin)) }
void convt3_dweight(const double* in, const double* gout, int64_t n, int64_t h, int64_t w, int64_t ci, int64_t co, double* gwt) { NFF_DISPATCH(convt3_dweight, n* h* w* ci* co * 9, (in, gout, n, h, w, ci, co, gwt)) }
void grid_fwd(const double* table, const double* p, const GridSpec& g, int64_t n, double* out) { NFF_DISPATCH(grid_fwd, n * g.levels, (table, p, g, n, out)) }
void grid_bwd_p(const double* table, const double* p, const GridSpec& g, int64_t n, const double* gout, double* gp) { NFF_DISPATCH(grid_bwd_p, n * g.levels, (table, p, g, n, gout, gp)) }

#undef NFF_DISPATCH

} // namespace nff::kernels
