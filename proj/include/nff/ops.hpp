// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Differentiable ops. Each builds one graph node eagerly; pull closures
// accumulate gradients through the kernel layer so parallel and serial
// execution stay bit-identical.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nff/autodiff.hpp"
#include "nff/grid.hpp"

namespace nff::ad {

// arithmetic
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var shift(Var a, double s);
Var neg(Var a);
Var mul_scalar_var(Var x, Var s); // s is rank 0
Var div_eps(Var a, Var b, double eps);
Var mul_const(Var a, Tensor m);

// reductions
Var sum(Var a);
Var mean(Var a);

// shape
Var reshape(Var a, Shape shape);
Var concat_cols(const std::vector<Var>& xs);
Var concat_rows(const std::vector<Var>& xs);
Var slice_cols(Var a, int64_t lo, int64_t hi);
Var gather_rows(Var a, std::shared_ptr<std::vector<int64_t>> idx);
Var scale_rows_const(Var a, Tensor s);

// neural net pieces
Var matmul(Var a, Var b);
Var linear(Var x, Var W, Var b);
Var sigmoid(Var x);
Var relu(Var x);
Var exp_(Var x);
Var log_eps(Var x, double eps);
Var softplus(Var x);
Var pow_const(Var x, double p);
Var conv2d(Var x, Var w, Var b, int64_t pad); // x (P,H,W,Ci), w (kh,kw,Ci,Co), b (Co) or null
Var convt3(Var x, Var w, Var b);              // kernel 3, stride 3 upsample

// geometry and rendering
Var rot_apply(Var R, Var x);   // R (N,9), x (N,3)
Var rot_compose(Var A, Var B); // (N,9) each
Var rot6d(Var p);              // (N,6) -> (N,9) via Gram-Schmidt
Var contract01(Var x, double scene_radius); // world points -> [0,1]^3
Var sh_encode(Var d, int degree);           // (N,3) unit dirs -> (N,(deg+1)^2)
Var grid_gather(Var table, std::shared_ptr<std::vector<int64_t>> idx, Tensor w);
// multilinear grid lookup with gradients to the table and the query points
Var hash_interp(Var table, Var p, std::shared_ptr<const GridMeta> meta,
                std::shared_ptr<std::vector<int64_t>> actor);
// out[i,j] = a[i, perm[j]]; perm must be a permutation
Var perm_cols(Var a, std::shared_ptr<std::vector<int64_t>> perm);
Var composite_weights(Var alpha);  // (R,S) -> (R,S)
Var weighted_reduce(Var w, Var f); // (R,S),(R,S,K) -> (R,K)
Var detach(Var a);

} // namespace nff::ad
