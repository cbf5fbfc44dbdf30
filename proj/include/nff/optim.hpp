// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nff/autodiff.hpp"
#include "nff/tensor.hpp"

namespace nff {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Parameters sharing one learning rate and warmup length.
struct ParamGroup {
    std::string name;
    std::vector<ad::Var> params;
    double lr = 1e-2;
    int64_t warmup = 500;
};

// Adam with per-group linear warmup followed by exponential decay of one
// order of magnitude over the run. A non-finite gradient anywhere skips the
// whole update (no parameter or moment changes) but still advances the
// schedule clock so it stays aligned with the training loop; bias correction
// counts applied steps only.
class Adam {
public:
    Adam(std::vector<ParamGroup> groups, int64_t total_steps, AdamConfig cfg = {});

    // Learning rate for step `step` (0-based) out of `total`.
    static double schedule(double lr0, int64_t warmup, int64_t step, int64_t total);

    // Applies one update from the gradients currently stored on the
    // parameters; params whose grad_ready flag is unset count as zero
    // gradient. Returns false when the step was skipped.
    bool step();

    // Clears grad_ready on every parameter. Call before backward so stale
    // gradients from a previous graph cannot leak into the next update.
    void reset_grads();

    double group_lr(size_t group) const;
    int64_t steps_taken() const { return step_; }
    int64_t skipped_steps() const { return skipped_; }
    const std::string& last_skip_reason() const { return skip_reason_; }
    const std::vector<ParamGroup>& groups() const { return groups_; }

    // Moment and counter state for checkpoints; parameter values are saved
    // separately by the caller.
    void save_state(std::ostream& out) const;
    void load_state(std::istream& in);

private:
    struct Slot {
        Tensor m, v;
    };

    AdamConfig cfg_;
    std::vector<ParamGroup> groups_;
    std::vector<std::vector<Slot>> slots_;
    int64_t total_ = 0;
    int64_t step_ = 0;
    int64_t applied_ = 0;
    int64_t skipped_ = 0;
    std::string skip_reason_;
};

} // namespace nff
