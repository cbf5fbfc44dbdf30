// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference gradient verification. Used by tests as the
// independent oracle for every differentiable op.

#pragma once

#include <functional>
#include <unordered_set>
#include <vector>

#include "nff/ops.hpp"
#include "nff/rng.hpp"

namespace nff::ad {

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t probes = 0;
    int worst_input = -1;
    int64_t worst_elem = -1;
    double worst_ad = 0.0;
    double worst_fd = 0.0;
};

// build must be a pure function of the parameter values. Each probe perturbs
// one input element by +-h and compares the central difference against the
// reverse-mode gradient. Relative error uses a small absolute floor so zero
// gradients are handled sanely.
inline GradCheckReport finite_diff_check(
    const std::function<Var(const std::vector<Var>&)>& build, std::vector<Tensor> inputs,
    double h = 1e-4, int64_t max_probes_per_input = 32, uint64_t seed = 7) {
    auto eval = [&](const std::vector<Tensor>& vals) {
        std::vector<Var> params;
        params.reserve(vals.size());
        for (const Tensor& t : vals) params.push_back(make_param(t));
        Var root = build(params);
        forward_eval(root);
        return root;
    };

    // analytic gradients
    std::vector<Var> params;
    params.reserve(inputs.size());
    for (const Tensor& t : inputs) params.push_back(make_param(t));
    Var root = build(params);
    forward_eval(root);
    backward(root);
    std::vector<Tensor> grads;
    for (const Var& p : params)
        grads.push_back(p->grad_ready ? p->grad : Tensor(p->value.shape()));

    GradCheckReport rep;
    uint64_t ctr = 0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        int64_t n = inputs[i].numel();
        std::vector<int64_t> probe;
        if (n <= max_probes_per_input) {
            for (int64_t e = 0; e < n; ++e) probe.push_back(e);
        } else {
            std::unordered_set<int64_t> seen;
            while (static_cast<int64_t>(probe.size()) < max_probes_per_input) {
                int64_t e = static_cast<int64_t>(rng::index(seed, 91, ctr++, static_cast<uint64_t>(n)));
                if (seen.insert(e).second) probe.push_back(e);
            }
        }
        for (int64_t e : probe) {
            double saved = inputs[i][e];
            inputs[i][e] = saved + h;
            double fp = scalar_value(eval(inputs));
            inputs[i][e] = saved - h;
            double fm = scalar_value(eval(inputs));
            inputs[i][e] = saved;
            double fd = (fp - fm) / (2.0 * h);
            double adg = grads[i][e];
            double rel = std::abs(adg - fd) / std::max({std::abs(adg), std::abs(fd), 1e-3});
            rep.probes++;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_input = static_cast<int>(i);
                rep.worst_elem = e;
                rep.worst_ad = adg;
                rep.worst_fd = fd;
            }
        }
    }
    return rep;
}

} // namespace nff::ad
