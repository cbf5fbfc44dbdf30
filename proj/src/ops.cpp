// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/ops.hpp"

#include <cmath>
#include <cstring>

#include "nff/kernels.hpp"

namespace nff::ad {

namespace K = nff::kernels;

namespace {

Var finish(Var n) {
    n->requires_grad = !n->edges.empty();
    return n;
}

void acc(Tensor& dst, const Tensor& src) {
    K::vaxpy(1.0, src.data(), dst.data(), dst.numel());
}

} // namespace

// ---------------------------------------------------------------------------
// arithmetic

Var add(Var a, Var b) {
    NFF_ASSERT(a->value.same_shape(b->value), "add shape mismatch");
    Tensor out(a->value.shape());
    K::vadd(a->value.data(), b->value.data(), out.data(), out.numel());
    Var n = make_node("add", std::move(out), {});
    if (a->requires_grad) n->edges.push_back({a, [p = a.get()](const Tensor& g) { acc(p->grad, g); }});
    if (b->requires_grad) n->edges.push_back({b, [p = b.get()](const Tensor& g) { acc(p->grad, g); }});
    return finish(n);
}

Var sub(Var a, Var b) {
    NFF_ASSERT(a->value.same_shape(b->value), "sub shape mismatch");
    Tensor out(a->value.shape());
    K::vsub(a->value.data(), b->value.data(), out.data(), out.numel());
    Var n = make_node("sub", std::move(out), {});
    if (a->requires_grad) n->edges.push_back({a, [p = a.get()](const Tensor& g) { acc(p->grad, g); }});
    if (b->requires_grad)
        n->edges.push_back(
            {b, [p = b.get()](const Tensor& g) { K::vaxpy(-1.0, g.data(), p->grad.data(), g.numel()); }});
    return finish(n);
}

Var mul(Var a, Var b) {
    NFF_ASSERT(a->value.same_shape(b->value), "mul shape mismatch");
    Tensor out(a->value.shape());
    K::vmul(a->value.data(), b->value.data(), out.data(), out.numel());
    Var n = make_node("mul", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), bv = b](const Tensor& g) {
                                K::vmuladd(g.data(), bv->value.data(), p->grad.data(), g.numel());
                            }});
    if (b->requires_grad)
        n->edges.push_back({b, [p = b.get(), av = a](const Tensor& g) {
                                K::vmuladd(g.data(), av->value.data(), p->grad.data(), g.numel());
                            }});
    return finish(n);
}

Var scale(Var a, double s) {
    Tensor out(a->value.shape());
    K::vscale(a->value.data(), s, out.data(), out.numel());
    Var n = make_node("scale", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back(
            {a, [p = a.get(), s](const Tensor& g) { K::vaxpy(s, g.data(), p->grad.data(), g.numel()); }});
    return finish(n);
}

Var shift(Var a, double s) {
    Tensor out(a->value.shape());
    K::vshift(a->value.data(), s, out.data(), out.numel());
    Var n = make_node("shift", std::move(out), {});
    if (a->requires_grad) n->edges.push_back({a, [p = a.get()](const Tensor& g) { acc(p->grad, g); }});
    return finish(n);
}

Var neg(Var a) { return scale(std::move(a), -1.0); }

Var mul_scalar_var(Var x, Var s) {
    NFF_ASSERT(s->value.numel() == 1, "mul_scalar_var needs a scalar second arg");
    double sv = s->value[0];
    Tensor out(x->value.shape());
    K::vscale(x->value.data(), sv, out.data(), out.numel());
    Var n = make_node("mul_scalar_var", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back(
            {x, [p = x.get(), sv](const Tensor& g) { K::vaxpy(sv, g.data(), p->grad.data(), g.numel()); }});
    if (s->requires_grad)
        n->edges.push_back({s, [p = s.get(), xv = x](const Tensor& g) {
                                Tensor t(g.shape());
                                K::vmul(g.data(), xv->value.data(), t.data(), t.numel());
                                p->grad[0] += K::reduce_sum(t.data(), t.numel());
                            }});
    return finish(n);
}

Var div_eps(Var a, Var b, double eps) {
    NFF_ASSERT(a->value.same_shape(b->value), "div_eps shape mismatch");
    auto inv = std::make_shared<Tensor>(b->value.shape());
    K::vshift(b->value.data(), eps, inv->data(), inv->numel());
    K::vpow(inv->data(), inv->data(), inv->numel(), -1.0);
    Tensor out(a->value.shape());
    K::vmul(a->value.data(), inv->data(), out.data(), out.numel());
    Var n = make_node("div_eps", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), inv](const Tensor& g) {
                                K::vmuladd(g.data(), inv->data(), p->grad.data(), g.numel());
                            }});
    if (b->requires_grad)
        n->edges.push_back({b, [p = b.get(), av = a, inv](const Tensor& g) {
                                Tensor t(g.shape());
                                K::vmul(g.data(), av->value.data(), t.data(), t.numel());
                                K::vmul(t.data(), inv->data(), t.data(), t.numel());
                                K::vmul(t.data(), inv->data(), t.data(), t.numel());
                                K::vaxpy(-1.0, t.data(), p->grad.data(), t.numel());
                            }});
    return finish(n);
}

Var mul_const(Var a, Tensor m) {
    NFF_ASSERT(a->value.numel() == m.numel(), "mul_const size mismatch");
    auto mc = std::make_shared<Tensor>(std::move(m));
    Tensor out(a->value.shape());
    K::vmul(a->value.data(), mc->data(), out.data(), out.numel());
    Var n = make_node("mul_const", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), mc](const Tensor& g) {
                                K::vmuladd(g.data(), mc->data(), p->grad.data(), g.numel());
                            }});
    return finish(n);
}

// ---------------------------------------------------------------------------
// reductions

Var sum(Var a) {
    Tensor out = Tensor::scalar(K::reduce_sum(a->value.data(), a->value.numel()));
    Var n = make_node("sum", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get()](const Tensor& g) {
                                K::vshift(p->grad.data(), g[0], p->grad.data(), p->grad.numel());
                            }});
    return finish(n);
}

Var mean(Var a) {
    int64_t cnt = a->value.numel();
    NFF_ASSERT(cnt > 0, "mean of empty tensor");
    Tensor out = Tensor::scalar(K::reduce_sum(a->value.data(), cnt) / static_cast<double>(cnt));
    Var n = make_node("mean", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), cnt](const Tensor& g) {
                                K::vshift(p->grad.data(), g[0] / static_cast<double>(cnt),
                                          p->grad.data(), p->grad.numel());
                            }});
    return finish(n);
}

// ---------------------------------------------------------------------------
// shape

Var reshape(Var a, Shape shape) {
    Tensor out = a->value;
    out.reshape_(std::move(shape));
    Var n = make_node("reshape", std::move(out), {});
    if (a->requires_grad) n->edges.push_back({a, [p = a.get()](const Tensor& g) { acc(p->grad, g); }});
    return finish(n);
}

Var concat_cols(const std::vector<Var>& xs) {
    NFF_ASSERT(!xs.empty(), "concat_cols of nothing");
    int64_t rows = xs[0]->value.size(0);
    int64_t cols = 0;
    for (const Var& x : xs) {
        NFF_ASSERT(x->value.rank() == 2 && x->value.size(0) == rows, "concat_cols shape mismatch");
        cols += x->value.size(1);
    }
    Tensor out({rows, cols});
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        double* o = out.data() + r * cols;
        for (const Var& x : xs) {
            int64_t k = x->value.size(1);
            std::memcpy(o, x->value.data() + r * k, sizeof(double) * static_cast<size_t>(k));
            o += k;
        }
    }
    Var n = make_node("concat_cols", std::move(out), {});
    int64_t off = 0;
    for (const Var& x : xs) {
        int64_t k = x->value.size(1);
        if (x->requires_grad)
            n->edges.push_back({x, [p = x.get(), off, k, cols, rows](const Tensor& g) {
#pragma omp parallel for schedule(static)
                                    for (int64_t r = 0; r < rows; ++r) {
                                        const double* gi = g.data() + r * cols + off;
                                        double* gp = p->grad.data() + r * k;
                                        for (int64_t j = 0; j < k; ++j) gp[j] += gi[j];
                                    }
                                }});
        off += k;
    }
    return finish(n);
}

Var concat_rows(const std::vector<Var>& xs) {
    NFF_ASSERT(!xs.empty(), "concat_rows of nothing");
    int64_t cols = xs[0]->value.size(1);
    int64_t rows = 0;
    for (const Var& x : xs) {
        NFF_ASSERT(x->value.rank() == 2 && x->value.size(1) == cols, "concat_rows shape mismatch");
        rows += x->value.size(0);
    }
    Tensor out({rows, cols});
    int64_t off = 0;
    for (const Var& x : xs) {
        std::memcpy(out.data() + off * cols, x->value.data(),
                    sizeof(double) * static_cast<size_t>(x->value.numel()));
        off += x->value.size(0);
    }
    Var n = make_node("concat_rows", std::move(out), {});
    off = 0;
    for (const Var& x : xs) {
        int64_t nr = x->value.size(0);
        if (x->requires_grad)
            n->edges.push_back({x, [p = x.get(), off, cols, nr](const Tensor& g) {
                                    K::vaxpy(1.0, g.data() + off * cols, p->grad.data(), nr * cols);
                                }});
        off += nr;
    }
    return finish(n);
}

Var slice_cols(Var a, int64_t lo, int64_t hi) {
    NFF_ASSERT(a->value.rank() == 2, "slice_cols needs rank 2");
    int64_t rows = a->value.size(0), cols = a->value.size(1);
    NFF_ASSERT(0 <= lo && lo < hi && hi <= cols, "slice_cols range invalid");
    int64_t k = hi - lo;
    Tensor out({rows, k});
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r)
        std::memcpy(out.data() + r * k, a->value.data() + r * cols + lo,
                    sizeof(double) * static_cast<size_t>(k));
    Var n = make_node("slice_cols", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), lo, k, cols, rows](const Tensor& g) {
#pragma omp parallel for schedule(static)
                                for (int64_t r = 0; r < rows; ++r) {
                                    const double* gi = g.data() + r * k;
                                    double* gp = p->grad.data() + r * cols + lo;
                                    for (int64_t j = 0; j < k; ++j) gp[j] += gi[j];
                                }
                            }});
    return finish(n);
}

Var gather_rows(Var a, std::shared_ptr<std::vector<int64_t>> idx) {
    NFF_ASSERT(a->value.rank() == 2, "gather_rows needs rank 2");
    int64_t src_rows = a->value.size(0), cols = a->value.size(1);
    int64_t n_out = static_cast<int64_t>(idx->size());
    Tensor out({n_out, cols});
    K::gather_rows(a->value.data(), src_rows, cols, idx->data(), n_out, out.data());
    Var n = make_node("gather_rows", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), idx, src_rows, cols, n_out](const Tensor& g) {
                                K::scatter_add_rows(p->grad.data(), src_rows, cols, idx->data(),
                                                    g.data(), n_out);
                            }});
    return finish(n);
}

Var scale_rows_const(Var a, Tensor s) {
    NFF_ASSERT(a->value.rank() == 2 && s.numel() == a->value.size(0), "scale_rows_const mismatch");
    auto sc = std::make_shared<Tensor>(std::move(s));
    int64_t rows = a->value.size(0), cols = a->value.size(1);
    Tensor out({rows, cols});
    K::scale_rows(a->value.data(), sc->data(), out.data(), rows, cols);
    Var n = make_node("scale_rows_const", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), sc, rows, cols](const Tensor& g) {
                                Tensor t({rows, cols});
                                K::scale_rows(g.data(), sc->data(), t.data(), rows, cols);
                                acc(p->grad, t);
                            }});
    return finish(n);
}

// ---------------------------------------------------------------------------
// neural net pieces

Var matmul(Var a, Var b) {
    NFF_ASSERT(a->value.rank() == 2 && b->value.rank() == 2 && a->value.size(1) == b->value.size(0),
               "matmul shape mismatch");
    int64_t M = a->value.size(0), Kd = a->value.size(1), N = b->value.size(1);
    Tensor out({M, N});
    K::matmul_nn(a->value.data(), b->value.data(), out.data(), M, Kd, N, false);
    Var n = make_node("matmul", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), bv = b, M, Kd, N](const Tensor& g) {
                                K::matmul_abt(g.data(), bv->value.data(), p->grad.data(), M, N, Kd, true);
                            }});
    if (b->requires_grad)
        n->edges.push_back({b, [p = b.get(), av = a, M, Kd, N](const Tensor& g) {
                                K::matmul_atb(av->value.data(), g.data(), p->grad.data(), M, Kd, N, true);
                            }});
    return finish(n);
}

Var linear(Var x, Var W, Var b) {
    NFF_ASSERT(x->value.rank() == 2 && W->value.rank() == 2 &&
                   x->value.size(1) == W->value.size(0),
               "linear shape mismatch");
    int64_t N = x->value.size(0), Kd = x->value.size(1), M = W->value.size(1);
    NFF_ASSERT(!b || (b->value.rank() == 1 && b->value.size(0) == M), "linear bias mismatch");
    Tensor out({N, M});
    K::matmul_nn(x->value.data(), W->value.data(), out.data(), N, Kd, M, false);
    if (b) {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < N; ++r)
            K::serial::vadd(out.data() + r * M, b->value.data(), out.data() + r * M, M);
    }
    Var n = make_node("linear", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), Wv = W, N, Kd, M](const Tensor& g) {
                                K::matmul_abt(g.data(), Wv->value.data(), p->grad.data(), N, M, Kd, true);
                            }});
    if (W->requires_grad)
        n->edges.push_back({W, [p = W.get(), xv = x, N, Kd, M](const Tensor& g) {
                                K::matmul_atb(xv->value.data(), g.data(), p->grad.data(), N, Kd, M, true);
                            }});
    if (b && b->requires_grad)
        n->edges.push_back({b, [p = b.get(), N, M](const Tensor& g) {
                                Tensor t({M});
                                K::colsum(g.data(), N, M, t.data());
                                acc(p->grad, t);
                            }});
    return finish(n);
}

namespace {

template <void Fwd(const double*, double*, int64_t), void BwdFromOut(const double*, const double*, double*, int64_t)>
Var unary_from_output(const char* name, Var x) {
    Tensor out(x->value.shape());
    Fwd(x->value.data(), out.data(), out.numel());
    Var n = make_node(name, std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), self = n.get()](const Tensor& g) {
                                BwdFromOut(self->value.data(), g.data(), p->grad.data(), g.numel());
                            }});
    return finish(n);
}

template <void Fwd(const double*, double*, int64_t), void BwdFromIn(const double*, const double*, double*, int64_t)>
Var unary_from_input(const char* name, Var x) {
    Tensor out(x->value.shape());
    Fwd(x->value.data(), out.data(), out.numel());
    Var n = make_node(name, std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), xv = x](const Tensor& g) {
                                BwdFromIn(xv->value.data(), g.data(), p->grad.data(), g.numel());
                            }});
    return finish(n);
}

} // namespace

Var sigmoid(Var x) { return unary_from_output<K::sigmoid, K::sigmoid_bwd>("sigmoid", std::move(x)); }
Var exp_(Var x) { return unary_from_output<K::vexp, K::vexp_bwd>("exp", std::move(x)); }
Var relu(Var x) { return unary_from_input<K::relu, K::relu_bwd>("relu", std::move(x)); }
Var softplus(Var x) { return unary_from_input<K::softplus, K::softplus_bwd>("softplus", std::move(x)); }

Var log_eps(Var x, double eps) {
    Tensor out(x->value.shape());
    K::vlog_eps(x->value.data(), out.data(), out.numel(), eps);
    Var n = make_node("log_eps", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), xv = x, eps](const Tensor& g) {
                                K::vlog_eps_bwd(xv->value.data(), g.data(), p->grad.data(), g.numel(), eps);
                            }});
    return finish(n);
}

Var pow_const(Var x, double pw) {
    Tensor out(x->value.shape());
    K::vpow(x->value.data(), out.data(), out.numel(), pw);
    Var n = make_node("pow_const", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), xv = x, pw](const Tensor& g) {
                                K::vpow_bwd(xv->value.data(), g.data(), p->grad.data(), g.numel(), pw);
                            }});
    return finish(n);
}

Var conv2d(Var x, Var w, Var b, int64_t pad) {
    NFF_ASSERT(x->value.rank() == 4 && w->value.rank() == 4, "conv2d needs 4d input and weight");
    int64_t P = x->value.size(0), H = x->value.size(1), W_ = x->value.size(2), Ci = x->value.size(3);
    int64_t kh = w->value.size(0), kw = w->value.size(1), Co = w->value.size(3);
    NFF_ASSERT(w->value.size(2) == Ci, "conv2d channel mismatch");
    NFF_ASSERT(!b || b->value.numel() == Co, "conv2d bias mismatch");
    int64_t Ho = H + 2 * pad - kh + 1, Wo = W_ + 2 * pad - kw + 1;
    Tensor out({P, Ho, Wo, Co});
    K::conv2d(x->value.data(), P, H, W_, Ci, w->value.data(), kh, kw, Co,
              b ? b->value.data() : nullptr, pad, out.data());
    Var n = make_node("conv2d", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), wv = w, P, H, W_, Ci, kh, kw, Co, pad](const Tensor& g) {
                                K::conv2d_dinput(g.data(), P, H, W_, Ci, wv->value.data(), kh, kw,
                                                 Co, pad, p->grad.data());
                            }});
    if (w->requires_grad)
        n->edges.push_back({w, [p = w.get(), xv = x, P, H, W_, Ci, kh, kw, Co, pad](const Tensor& g) {
                                K::conv2d_dweight(xv->value.data(), g.data(), P, H, W_, Ci, kh, kw,
                                                  Co, pad, p->grad.data());
                            }});
    if (b && b->requires_grad)
        n->edges.push_back({b, [p = b.get(), P, Ho, Wo, Co](const Tensor& g) {
                                Tensor t({Co});
                                K::colsum(g.data(), P * Ho * Wo, Co, t.data());
                                acc(p->grad, t);
                            }});
    return finish(n);
}

Var convt3(Var x, Var w, Var b) {
    NFF_ASSERT(x->value.rank() == 4 && w->value.rank() == 4 && w->value.size(0) == 3 &&
                   w->value.size(1) == 3,
               "convt3 needs 4d input and 3x3 weight");
    int64_t P = x->value.size(0), H = x->value.size(1), W_ = x->value.size(2), Ci = x->value.size(3);
    int64_t Co = w->value.size(3);
    NFF_ASSERT(w->value.size(2) == Ci, "convt3 channel mismatch");
    Tensor out({P, 3 * H, 3 * W_, Co});
    K::convt3(x->value.data(), P, H, W_, Ci, w->value.data(), Co, b ? b->value.data() : nullptr,
              out.data());
    Var n = make_node("convt3", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), wv = w, P, H, W_, Ci, Co](const Tensor& g) {
                                K::convt3_dinput(g.data(), P, H, W_, Ci, wv->value.data(), Co,
                                                 p->grad.data());
                            }});
    if (w->requires_grad)
        n->edges.push_back({w, [p = w.get(), xv = x, P, H, W_, Ci, Co](const Tensor& g) {
                                K::convt3_dweight(xv->value.data(), g.data(), P, H, W_, Ci, Co,
                                                  p->grad.data());
                            }});
    if (b && b->requires_grad)
        n->edges.push_back({b, [p = b.get(), P, H, W_, Co](const Tensor& g) {
                                Tensor t({Co});
                                K::colsum(g.data(), P * 9 * H * W_, Co, t.data());
                                acc(p->grad, t);
                            }});
    return finish(n);
}

// ---------------------------------------------------------------------------
// geometry and rendering

Var rot_apply(Var R, Var x) {
    NFF_ASSERT(R->value.rank() == 2 && R->value.size(1) == 9 && x->value.rank() == 2 &&
                   x->value.size(1) == 3 && R->value.size(0) == x->value.size(0),
               "rot_apply shape mismatch");
    int64_t n_rows = x->value.size(0);
    Tensor out({n_rows, 3});
    K::rot_apply(R->value.data(), x->value.data(), out.data(), n_rows);
    Var n = make_node("rot_apply", std::move(out), {});
    if (R->requires_grad)
        n->edges.push_back({R, [p = R.get(), Rv = R, xv = x, n_rows](const Tensor& g) {
                                K::rot_apply_bwd(Rv->value.data(), xv->value.data(), g.data(),
                                                 p->grad.data(), nullptr, n_rows);
                            }});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), Rv = R, xv = x, n_rows](const Tensor& g) {
                                K::rot_apply_bwd(Rv->value.data(), xv->value.data(), g.data(),
                                                 nullptr, p->grad.data(), n_rows);
                            }});
    return finish(n);
}

Var rot_compose(Var A, Var B) {
    NFF_ASSERT(A->value.rank() == 2 && A->value.size(1) == 9 && B->value.same_shape(A->value),
               "rot_compose shape mismatch");
    int64_t n_rows = A->value.size(0);
    Tensor out({n_rows, 9});
    K::rot_compose(A->value.data(), B->value.data(), out.data(), n_rows);
    Var n = make_node("rot_compose", std::move(out), {});
    if (A->requires_grad)
        n->edges.push_back({A, [p = A.get(), Av = A, Bv = B, n_rows](const Tensor& g) {
                                K::rot_compose_bwd(Av->value.data(), Bv->value.data(), g.data(),
                                                   p->grad.data(), nullptr, n_rows);
                            }});
    if (B->requires_grad)
        n->edges.push_back({B, [p = B.get(), Av = A, Bv = B, n_rows](const Tensor& g) {
                                K::rot_compose_bwd(Av->value.data(), Bv->value.data(), g.data(),
                                                   nullptr, p->grad.data(), n_rows);
                            }});
    return finish(n);
}

namespace {

// Gram-Schmidt of the two column 3-vectors in p = (a, b); rows of R are
// r1 = a/|a|, r2 = normalized(b - (r1.b) r1), r3 = r1 x r2.
inline void rot6d_row(const double* p, double* R) {
    double ax = p[0], ay = p[1], az = p[2];
    double bx = p[3], by = p[4], bz = p[5];
    double na = std::sqrt(ax * ax + ay * ay + az * az);
    double r1x = ax / na, r1y = ay / na, r1z = az / na;
    double d = r1x * bx + r1y * by + r1z * bz;
    double cx = bx - d * r1x, cy = by - d * r1y, cz = bz - d * r1z;
    double nc = std::sqrt(cx * cx + cy * cy + cz * cz);
    double r2x = cx / nc, r2y = cy / nc, r2z = cz / nc;
    R[0] = r1x; R[1] = r1y; R[2] = r1z;
    R[3] = r2x; R[4] = r2y; R[5] = r2z;
    R[6] = r1y * r2z - r1z * r2y;
    R[7] = r1z * r2x - r1x * r2z;
    R[8] = r1x * r2y - r1y * r2x;
}

inline void rot6d_row_bwd(const double* p, const double* g, double* gp) {
    double ax = p[0], ay = p[1], az = p[2];
    double bx = p[3], by = p[4], bz = p[5];
    double na = std::sqrt(ax * ax + ay * ay + az * az);
    double r1[3] = {ax / na, ay / na, az / na};
    double d = r1[0] * bx + r1[1] * by + r1[2] * bz;
    double c[3] = {bx - d * r1[0], by - d * r1[1], bz - d * r1[2]};
    double nc = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    double r2[3] = {c[0] / nc, c[1] / nc, c[2] / nc};
    const double* g1 = g;
    const double* g2 = g + 3;
    const double* g3 = g + 6;
    // r3 = r1 x r2: gr1 += r2 x g3, gr2 += g3 x r1
    double gr1[3] = {g1[0] + r2[1] * g3[2] - r2[2] * g3[1],
                     g1[1] + r2[2] * g3[0] - r2[0] * g3[2],
                     g1[2] + r2[0] * g3[1] - r2[1] * g3[0]};
    double gr2[3] = {g2[0] + g3[1] * r1[2] - g3[2] * r1[1],
                     g2[1] + g3[2] * r1[0] - g3[0] * r1[2],
                     g2[2] + g3[0] * r1[1] - g3[1] * r1[0]};
    // r2 = c/|c|
    double dotc = r2[0] * gr2[0] + r2[1] * gr2[1] + r2[2] * gr2[2];
    double gc[3] = {(gr2[0] - dotc * r2[0]) / nc, (gr2[1] - dotc * r2[1]) / nc,
                    (gr2[2] - dotc * r2[2]) / nc};
    // c = b - (r1.b) r1
    double gcr1 = gc[0] * r1[0] + gc[1] * r1[1] + gc[2] * r1[2];
    double gb[3] = {gc[0] - gcr1 * r1[0], gc[1] - gcr1 * r1[1], gc[2] - gcr1 * r1[2]};
    gr1[0] += -gcr1 * bx - d * gc[0];
    gr1[1] += -gcr1 * by - d * gc[1];
    gr1[2] += -gcr1 * bz - d * gc[2];
    // r1 = a/|a|
    double dota = r1[0] * gr1[0] + r1[1] * gr1[1] + r1[2] * gr1[2];
    gp[0] += (gr1[0] - dota * r1[0]) / na;
    gp[1] += (gr1[1] - dota * r1[1]) / na;
    gp[2] += (gr1[2] - dota * r1[2]) / na;
    gp[3] += gb[0];
    gp[4] += gb[1];
    gp[5] += gb[2];
}

} // namespace

Var rot6d(Var p) {
    NFF_ASSERT(p->value.rank() == 2 && p->value.size(1) == 6, "rot6d needs (N,6)");
    int64_t n_rows = p->value.size(0);
    Tensor out({n_rows, 9});
    const double* pv = p->value.data();
    double* ov = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n_rows; ++i) rot6d_row(pv + i * 6, ov + i * 9);
    Var n = make_node("rot6d", std::move(out), {});
    if (p->requires_grad)
        n->edges.push_back({p, [q = p.get(), pvar = p, n_rows](const Tensor& g) {
                                const double* pd = pvar->value.data();
                                const double* gd = g.data();
                                double* gp = q->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t i = 0; i < n_rows; ++i)
                                    rot6d_row_bwd(pd + i * 6, gd + i * 9, gp + i * 6);
                            }});
    return finish(n);
}

namespace {

// Radial contraction of v = x / radius: identity inside the unit ball, else
// (2 - 1/|v|) v/|v|; then mapped affinely from [-2,2] to [0,1].
inline void contract_row(const double* x, double radius, double* u) {
    double v0 = x[0] / radius, v1 = x[1] / radius, v2 = x[2] / radius;
    double n2 = v0 * v0 + v1 * v1 + v2 * v2;
    if (n2 > 1.0) {
        double nn = std::sqrt(n2);
        double f = (2.0 - 1.0 / nn) / nn;
        v0 *= f;
        v1 *= f;
        v2 *= f;
    }
    u[0] = (v0 + 2.0) * 0.25;
    u[1] = (v1 + 2.0) * 0.25;
    u[2] = (v2 + 2.0) * 0.25;
}

inline void contract_row_bwd(const double* x, double radius, const double* gu, double* gx) {
    double v0 = x[0] / radius, v1 = x[1] / radius, v2 = x[2] / radius;
    double n2 = v0 * v0 + v1 * v1 + v2 * v2;
    double s = 0.25 / radius;
    if (n2 <= 1.0) {
        gx[0] += gu[0] * s;
        gx[1] += gu[1] * s;
        gx[2] += gu[2] * s;
        return;
    }
    double nn = std::sqrt(n2);
    double gfn = 2.0 / nn - 1.0 / n2;                // g(n)
    double gprime = -2.0 / n2 + 2.0 / (n2 * nn);     // g'(n)
    double vg = v0 * gu[0] + v1 * gu[1] + v2 * gu[2];
    double k = gprime / nn * vg;
    gx[0] += s * (gfn * gu[0] + k * v0);
    gx[1] += s * (gfn * gu[1] + k * v1);
    gx[2] += s * (gfn * gu[2] + k * v2);
}

} // namespace

Var contract01(Var x, double scene_radius) {
    NFF_ASSERT(x->value.rank() == 2 && x->value.size(1) == 3, "contract01 needs (N,3)");
    NFF_ASSERT(scene_radius > 0.0, "scene radius must be positive");
    int64_t n_rows = x->value.size(0);
    Tensor out({n_rows, 3});
    const double* xv = x->value.data();
    double* ov = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n_rows; ++i) contract_row(xv + i * 3, scene_radius, ov + i * 3);
    Var n = make_node("contract01", std::move(out), {});
    if (x->requires_grad)
        n->edges.push_back({x, [p = x.get(), xvar = x, scene_radius, n_rows](const Tensor& g) {
                                const double* xd = xvar->value.data();
                                const double* gd = g.data();
                                double* gx = p->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t i = 0; i < n_rows; ++i)
                                    contract_row_bwd(xd + i * 3, scene_radius, gd + i * 3, gx + i * 3);
                            }});
    return finish(n);
}

namespace {

// Real spherical harmonics up to degree 3 as fixed polynomials in (x,y,z).
inline void sh_row(double x, double y, double z, int nb, double* o) {
    o[0] = 0.28209479177387814;
    if (nb <= 1) return;
    o[1] = -0.4886025119029199 * y;
    o[2] = 0.4886025119029199 * z;
    o[3] = -0.4886025119029199 * x;
    if (nb <= 4) return;
    o[4] = 1.0925484305920792 * x * y;
    o[5] = -1.0925484305920792 * y * z;
    o[6] = 0.31539156525252005 * (3.0 * z * z - 1.0);
    o[7] = -1.0925484305920792 * x * z;
    o[8] = 0.5462742152960396 * (x * x - y * y);
    if (nb <= 9) return;
    o[9] = -0.5900435899266435 * y * (3.0 * x * x - y * y);
    o[10] = 2.8906114426405538 * x * y * z;
    o[11] = -0.4570457994644658 * y * (5.0 * z * z - 1.0);
    o[12] = 0.3731763325901154 * z * (5.0 * z * z - 3.0);
    o[13] = -0.4570457994644658 * x * (5.0 * z * z - 1.0);
    o[14] = 1.4453057213202769 * z * (x * x - y * y);
    o[15] = -0.5900435899266435 * x * (x * x - 3.0 * y * y);
}

inline void sh_row_bwd(double x, double y, double z, int nb, const double* g, double* gd) {
    double gx = 0.0, gy = 0.0, gz = 0.0;
    if (nb > 1) {
        gy += -0.4886025119029199 * g[1];
        gz += 0.4886025119029199 * g[2];
        gx += -0.4886025119029199 * g[3];
    }
    if (nb > 4) {
        gx += 1.0925484305920792 * y * g[4];
        gy += 1.0925484305920792 * x * g[4];
        gy += -1.0925484305920792 * z * g[5];
        gz += -1.0925484305920792 * y * g[5];
        gz += 0.31539156525252005 * 6.0 * z * g[6];
        gx += -1.0925484305920792 * z * g[7];
        gz += -1.0925484305920792 * x * g[7];
        gx += 0.5462742152960396 * 2.0 * x * g[8];
        gy += -0.5462742152960396 * 2.0 * y * g[8];
    }
    if (nb > 9) {
        gx += -0.5900435899266435 * 6.0 * x * y * g[9];
        gy += -0.5900435899266435 * (3.0 * x * x - 3.0 * y * y) * g[9];
        gx += 2.8906114426405538 * y * z * g[10];
        gy += 2.8906114426405538 * x * z * g[10];
        gz += 2.8906114426405538 * x * y * g[10];
        gy += -0.4570457994644658 * (5.0 * z * z - 1.0) * g[11];
        gz += -0.4570457994644658 * 10.0 * y * z * g[11];
        gz += 0.3731763325901154 * (15.0 * z * z - 3.0) * g[12];
        gx += -0.4570457994644658 * (5.0 * z * z - 1.0) * g[13];
        gz += -0.4570457994644658 * 10.0 * x * z * g[13];
        gx += 1.4453057213202769 * 2.0 * x * z * g[14];
        gy += -1.4453057213202769 * 2.0 * y * z * g[14];
        gz += 1.4453057213202769 * (x * x - y * y) * g[14];
        gx += -0.5900435899266435 * (3.0 * x * x - 3.0 * y * y) * g[15];
        gy += 0.5900435899266435 * 6.0 * x * y * g[15];
    }
    gd[0] += gx;
    gd[1] += gy;
    gd[2] += gz;
}

} // namespace

Var sh_encode(Var d, int degree) {
    NFF_ASSERT(d->value.rank() == 2 && d->value.size(1) == 3, "sh_encode needs (N,3)");
    NFF_ASSERT(degree >= 0 && degree <= 3, "sh degree must be in [0,3]");
    int nb = (degree + 1) * (degree + 1);
    int64_t n_rows = d->value.size(0);
    Tensor out({n_rows, nb});
    const double* dv = d->value.data();
    double* ov = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n_rows; ++i)
        sh_row(dv[i * 3], dv[i * 3 + 1], dv[i * 3 + 2], nb, ov + i * nb);
    Var n = make_node("sh_encode", std::move(out), {});
    if (d->requires_grad)
        n->edges.push_back({d, [p = d.get(), dvar = d, nb, n_rows](const Tensor& g) {
                                const double* dd = dvar->value.data();
                                const double* gd = g.data();
                                double* gp = p->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t i = 0; i < n_rows; ++i)
                                    sh_row_bwd(dd[i * 3], dd[i * 3 + 1], dd[i * 3 + 2], nb,
                                               gd + i * nb, gp + i * 3);
                            }});
    return finish(n);
}

Var grid_gather(Var table, std::shared_ptr<std::vector<int64_t>> idx, Tensor w) {
    NFF_ASSERT(table->value.rank() == 2, "grid_gather table must be (T,F)");
    NFF_ASSERT(w.rank() == 2, "grid_gather weights must be (N,C)");
    int64_t N = w.size(0), C = w.size(1);
    NFF_ASSERT(static_cast<int64_t>(idx->size()) == N * C, "grid_gather idx size mismatch");
    int64_t T = table->value.size(0), F = table->value.size(1);
    auto wc = std::make_shared<Tensor>(std::move(w));
    Tensor gathered({N * C, F});
    K::gather_rows(table->value.data(), T, F, idx->data(), N * C, gathered.data());
    K::scale_rows(gathered.data(), wc->data(), gathered.data(), N * C, F);
    Tensor out({N, F});
    K::group_sum_rows(gathered.data(), N, C, F, out.data());
    Var n = make_node("grid_gather", std::move(out), {});
    if (table->requires_grad)
        n->edges.push_back({table, [p = table.get(), idx, wc, N, C, F, T](const Tensor& g) {
                                Tensor contrib({N * C, F});
                                const double* gw = wc->data();
                                const double* gd = g.data();
                                double* cd = contrib.data();
#pragma omp parallel for schedule(static)
                                for (int64_t i = 0; i < N; ++i) {
                                    const double* gr = gd + i * F;
                                    for (int64_t c = 0; c < C; ++c) {
                                        double wv = gw[i * C + c];
                                        double* cr = cd + (i * C + c) * F;
                                        for (int64_t f = 0; f < F; ++f) cr[f] = wv * gr[f];
                                    }
                                }
                                K::scatter_add_rows(p->grad.data(), T, F, idx->data(), cd, N * C);
                            }});
    return finish(n);
}

Var hash_interp(Var table, Var p, std::shared_ptr<const GridMeta> meta,
                std::shared_ptr<std::vector<int64_t>> actor) {
    NFF_ASSERT(table->value.rank() == 2 && p->value.rank() == 2 && p->value.size(1) == 3,
               "hash_interp wants table (T,F), p (N,3)");
    NFF_ASSERT(table->value.size(0) == meta->total_rows &&
                   table->value.size(1) == meta->cfg.feat,
               "hash_interp table does not match grid meta");
    int64_t N = p->value.size(0);
    NFF_ASSERT(!actor || static_cast<int64_t>(actor->size()) == N, "hash_interp actor size");
    K::GridSpec g = meta->spec(actor ? actor->data() : nullptr);
    Tensor out({N, static_cast<int64_t>(meta->cfg.levels) * meta->cfg.feat});
    K::grid_fwd(table->value.data(), p->value.data(), g, N, out.data());
    Var n = make_node("hash_interp", std::move(out), {});
    if (table->requires_grad)
        n->edges.push_back({table, [t = table.get(), p, meta, actor, N](const Tensor& gy) {
                                K::GridSpec g = meta->spec(actor ? actor->data() : nullptr);
                                K::grid_bwd_table(p->value.data(), g, N, gy.data(),
                                                  t->grad.data());
                            }});
    if (p->requires_grad)
        n->edges.push_back({p, [q = p.get(), table, meta, actor, N](const Tensor& gy) {
                                K::GridSpec g = meta->spec(actor ? actor->data() : nullptr);
                                K::grid_bwd_p(table->value.data(), q->value.data(), g, N,
                                              gy.data(), q->grad.data());
                            }});
    return finish(n);
}

Var perm_cols(Var a, std::shared_ptr<std::vector<int64_t>> perm) {
    NFF_ASSERT(a->value.rank() == 2, "perm_cols needs (R,C)");
    int64_t R = a->value.size(0), C = a->value.size(1);
    NFF_ASSERT(static_cast<int64_t>(perm->size()) == C, "perm_cols size mismatch");
    std::vector<bool> seen(static_cast<size_t>(C), false);
    for (int64_t j : *perm) {
        NFF_ASSERT(j >= 0 && j < C && !seen[static_cast<size_t>(j)], "perm_cols not a permutation");
        seen[static_cast<size_t>(j)] = true;
    }
    Tensor out({R, C});
    {
        const double* av = a->value.data();
        double* ov = out.data();
        const int64_t* pm = perm->data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < R; ++i)
            for (int64_t j = 0; j < C; ++j) ov[i * C + j] = av[i * C + pm[j]];
    }
    Var n = make_node("perm_cols", std::move(out), {});
    if (a->requires_grad)
        n->edges.push_back({a, [p = a.get(), perm, R, C](const Tensor& gy) {
                                double* ga = p->grad.data();
                                const double* gv = gy.data();
                                const int64_t* pm = perm->data();
#pragma omp parallel for schedule(static)
                                for (int64_t i = 0; i < R; ++i)
                                    for (int64_t j = 0; j < C; ++j)
                                        ga[i * C + pm[j]] += gv[i * C + j];
                            }});
    return finish(n);
}

Var composite_weights(Var alpha) {
    NFF_ASSERT(alpha->value.rank() == 2, "composite_weights needs (R,S)");
    int64_t R = alpha->value.size(0), S = alpha->value.size(1);
    Tensor out({R, S});
    const double* av = alpha->value.data();
    double* wv = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < R; ++r) {
        double T = 1.0;
        const double* a = av + r * S;
        double* w = wv + r * S;
        for (int64_t s = 0; s < S; ++s) {
            w[s] = a[s] * T;
            T *= (1.0 - a[s]);
        }
    }
    Var n = make_node("composite_weights", std::move(out), {});
    if (alpha->requires_grad)
        n->edges.push_back({alpha, [p = alpha.get(), avar = alpha, R, S](const Tensor& g) {
                                const double* av2 = avar->value.data();
                                const double* gd = g.data();
                                double* ga = p->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t r = 0; r < R; ++r) {
                                    const double* a = av2 + r * S;
                                    const double* gr = gd + r * S;
                                    double* gp = ga + r * S;
                                    std::vector<double> T(static_cast<size_t>(S));
                                    double t = 1.0;
                                    for (int64_t s = 0; s < S; ++s) {
                                        T[static_cast<size_t>(s)] = t;
                                        t *= (1.0 - a[s]);
                                    }
                                    double suffix = 0.0;
                                    for (int64_t s = S - 1; s >= 0; --s) {
                                        double w = a[s] * T[static_cast<size_t>(s)];
                                        double denom = std::max(1.0 - a[s], 1e-12);
                                        gp[s] += gr[s] * T[static_cast<size_t>(s)] - suffix / denom;
                                        suffix += gr[s] * w;
                                    }
                                }
                            }});
    return finish(n);
}

Var weighted_reduce(Var w, Var f) {
    NFF_ASSERT(w->value.rank() == 2 && f->value.rank() == 3 && w->value.size(0) == f->value.size(0) &&
                   w->value.size(1) == f->value.size(1),
               "weighted_reduce shape mismatch");
    int64_t R = w->value.size(0), S = w->value.size(1), Kc = f->value.size(2);
    Tensor out({R, Kc});
    const double* wv = w->value.data();
    const double* fv = f->value.data();
    double* ov = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < R; ++r) {
        double* o = ov + r * Kc;
        for (int64_t k = 0; k < Kc; ++k) o[k] = 0.0;
        for (int64_t s = 0; s < S; ++s) {
            double ws = wv[r * S + s];
            const double* fr = fv + (r * S + s) * Kc;
            for (int64_t k = 0; k < Kc; ++k) o[k] += ws * fr[k];
        }
    }
    Var n = make_node("weighted_reduce", std::move(out), {});
    if (w->requires_grad)
        n->edges.push_back({w, [p = w.get(), fvar = f, R, S, Kc](const Tensor& g) {
                                const double* fd = fvar->value.data();
                                const double* gd = g.data();
                                double* gw = p->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t r = 0; r < R; ++r) {
                                    const double* gr = gd + r * Kc;
                                    for (int64_t s = 0; s < S; ++s) {
                                        const double* fr = fd + (r * S + s) * Kc;
                                        double acc2 = 0.0;
                                        for (int64_t k = 0; k < Kc; ++k) acc2 += fr[k] * gr[k];
                                        gw[r * S + s] += acc2;
                                    }
                                }
                            }});
    if (f->requires_grad)
        n->edges.push_back({f, [p = f.get(), wvar = w, R, S, Kc](const Tensor& g) {
                                const double* wd = wvar->value.data();
                                const double* gd = g.data();
                                double* gf = p->grad.data();
#pragma omp parallel for schedule(static)
                                for (int64_t r = 0; r < R; ++r) {
                                    const double* gr = gd + r * Kc;
                                    for (int64_t s = 0; s < S; ++s) {
                                        double ws = wd[r * S + s];
                                        double* fr = gf + (r * S + s) * Kc;
                                        for (int64_t k = 0; k < Kc; ++k) fr[k] += ws * gr[k];
                                    }
                                }
                            }});
    return finish(n);
}

Var detach(Var a) { return make_const(a->value); }

} // namespace nff::ad
