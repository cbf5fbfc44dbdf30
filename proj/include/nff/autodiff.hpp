// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode autodiff over an eagerly built node graph. Ops compute values
// at construction time; forward_eval only stamps the reachable set as
// evaluated, and backward refuses to run on an unevaluated root. Gradients
// accumulate through per-edge pull closures, processed in descending creation
// order, which is a valid topological order because parents always predate
// children.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nff/tensor.hpp"

namespace nff::ad {

class Node;
using Var = std::shared_ptr<Node>;

// Pulls the child's output gradient into parent->grad (accumulating).
struct Edge {
    Var parent;
    std::function<void(const Tensor& gout)> pull;
};

class Node {
public:
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    bool evaluated = false;
    int64_t seq = 0;
    const char* op = "leaf";
    std::vector<Edge> edges;
};

Var make_param(Tensor value);
Var make_const(Tensor value);

// Build an op node; requires_grad follows from having edges.
Var make_node(const char* op, Tensor value, std::vector<Edge> edges);

// Marks every node reachable from root as evaluated.
void forward_eval(const Var& root);

// Reverse pass from a scalar, evaluated root. Allocates and zeroes grads for
// the reachable differentiable set, seeds the root with 1, then pulls edges
// in descending seq order. Repeatable: each call starts from zeroed grads.
void backward(const Var& root);

// Reachable node count, for tests.
size_t graph_size(const Var& root);

inline double scalar_value(const Var& v) {
    NFF_ASSERT(v && v->value.numel() == 1, "scalar_value needs a scalar node");
    return v->value[0];
}

} // namespace nff::ad
