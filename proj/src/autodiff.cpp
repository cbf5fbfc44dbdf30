// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

namespace nff::ad {

namespace {

std::atomic<int64_t> g_seq{0};

std::vector<Node*> reachable(const Var& root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.get()};
    seen.insert(root.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const Edge& e : n->edges) {
            Node* p = e.parent.get();
            if (seen.insert(p).second) stack.push_back(p);
        }
    }
    return order;
}

} // namespace

Var make_param(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    n->op = "param";
    return n;
}

Var make_const(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = false;
    n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    n->op = "const";
    return n;
}

Var make_node(const char* op, Tensor value, std::vector<Edge> edges) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->edges = std::move(edges);
    n->requires_grad = !n->edges.empty();
    n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
    n->op = op;
    return n;
}

void forward_eval(const Var& root) {
    NFF_ASSERT(root, "forward_eval on null root");
    for (Node* n : reachable(root)) n->evaluated = true;
}

void backward(const Var& root) {
    NFF_ASSERT(root, "backward on null root");
    NFF_CHECK(root->evaluated, ErrKind::internal, "backward requires forward_eval on the root");
    NFF_CHECK(root->value.numel() == 1, ErrKind::internal,
              "backward root must be scalar, got numel ", root->value.numel());

    std::vector<Node*> nodes = reachable(root);
    for (Node* n : nodes) n->grad_ready = false;
    for (Node* n : nodes) {
        if (n->requires_grad || n == root.get()) {
            n->grad = Tensor(n->value.shape());
            n->grad_ready = true;
        }
    }
    root->grad.fill(1.0);

    std::sort(nodes.begin(), nodes.end(),
              [](const Node* a, const Node* b) { return a->seq > b->seq; });
    for (Node* n : nodes) {
        if (!n->grad_ready) continue;
        for (const Edge& e : n->edges) {
            if (e.parent->requires_grad) e.pull(n->grad);
        }
    }
}

size_t graph_size(const Var& root) { return reachable(root).size(); }

} // namespace nff::ad
