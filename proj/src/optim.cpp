// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#include "nff/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "nff/common.hpp"

namespace nff {

namespace {

constexpr char kStateMagic[] = "nffadam1";

void write_i64(std::ostream& out, int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

int64_t read_i64(std::istream& in) {
    int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    NFF_CHECK(in.good(), ErrKind::data, "truncated optimizer state");
    return v;
}

} // namespace

Adam::Adam(std::vector<ParamGroup> groups, int64_t total_steps, AdamConfig cfg)
    : cfg_(cfg), groups_(std::move(groups)), total_(total_steps) {
    NFF_CHECK(total_ > 0, ErrKind::config, "total steps must be positive, got ", total_);
    NFF_CHECK(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0,
              ErrKind::config, "adam betas must lie in [0,1)");
    NFF_CHECK(cfg_.eps > 0.0, ErrKind::config, "adam eps must be positive");
    slots_.resize(groups_.size());
    for (size_t g = 0; g < groups_.size(); ++g) {
        NFF_CHECK(groups_[g].lr >= 0.0, ErrKind::config, "group '", groups_[g].name,
                  "': learning rate must be nonnegative");
        NFF_CHECK(groups_[g].warmup >= 0, ErrKind::config, "group '", groups_[g].name,
                  "': warmup must be nonnegative");
        slots_[g].reserve(groups_[g].params.size());
        for (const ad::Var& p : groups_[g].params) {
            NFF_CHECK(p && p->requires_grad, ErrKind::config, "group '", groups_[g].name,
                      "': every entry must be a parameter");
            slots_[g].push_back({Tensor(p->value.shape()), Tensor(p->value.shape())});
        }
    }
}

double Adam::schedule(double lr0, int64_t warmup, int64_t step, int64_t total) {
    double f = 1.0;
    if (warmup > 0 && step + 1 < warmup)
        f = static_cast<double>(step + 1) / static_cast<double>(warmup);
    double decay = 1.0;
    if (total > 1)
        decay = std::pow(10.0, -static_cast<double>(step) / static_cast<double>(total - 1));
    return lr0 * f * decay;
}

double Adam::group_lr(size_t group) const {
    NFF_CHECK(group < groups_.size(), ErrKind::config, "group index out of range");
    return schedule(groups_[group].lr, groups_[group].warmup, step_, total_);
}

void Adam::reset_grads() {
    for (ParamGroup& g : groups_)
        for (ad::Var& p : g.params) p->grad_ready = false;
}

bool Adam::step() {
    for (size_t g = 0; g < groups_.size(); ++g)
        for (size_t i = 0; i < groups_[g].params.size(); ++i) {
            const ad::Var& p = groups_[g].params[i];
            if (!p->grad_ready) continue;
            for (int64_t k = 0; k < p->grad.numel(); ++k)
                if (!std::isfinite(p->grad.data()[k])) {
                    skip_reason_ = "step " + std::to_string(step_) + ": group '" +
                                   groups_[g].name + "' param " + std::to_string(i) +
                                   " has a non-finite gradient";
                    ++skipped_;
                    ++step_;
                    return false;
                }
        }

    const int64_t t = applied_ + 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (size_t g = 0; g < groups_.size(); ++g) {
        const double lr = group_lr(g);
        for (size_t i = 0; i < groups_[g].params.size(); ++i) {
            const ad::Var& p = groups_[g].params[i];
            Slot& s = slots_[g][i];
            const int64_t n = p->value.numel();
            for (int64_t k = 0; k < n; ++k) {
                const double grad = p->grad_ready ? p->grad.data()[k] : 0.0;
                double& m = s.m.data()[k];
                double& v = s.v.data()[k];
                m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
                v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad * grad;
                const double mh = m / bc1;
                const double vh = v / bc2;
                p->value.data()[k] -= lr * mh / (std::sqrt(vh) + cfg_.eps);
            }
        }
    }
    ++step_;
    ++applied_;
    return true;
}

void Adam::save_state(std::ostream& out) const {
    out.write(kStateMagic, sizeof kStateMagic - 1);
    write_i64(out, step_);
    write_i64(out, applied_);
    write_i64(out, skipped_);
    write_i64(out, static_cast<int64_t>(groups_.size()));
    for (size_t g = 0; g < groups_.size(); ++g) {
        write_i64(out, static_cast<int64_t>(slots_[g].size()));
        for (const Slot& s : slots_[g]) {
            write_i64(out, s.m.numel());
            out.write(reinterpret_cast<const char*>(s.m.data()),
                      static_cast<std::streamsize>(sizeof(double)) * s.m.numel());
            out.write(reinterpret_cast<const char*>(s.v.data()),
                      static_cast<std::streamsize>(sizeof(double)) * s.v.numel());
        }
    }
    NFF_CHECK(out.good(), ErrKind::data, "failed writing optimizer state");
}

void Adam::load_state(std::istream& in) {
    char magic[sizeof kStateMagic - 1];
    in.read(magic, sizeof magic);
    NFF_CHECK(in.good() && std::string(magic, sizeof magic) == kStateMagic, ErrKind::data,
              "bad optimizer state header");
    step_ = read_i64(in);
    applied_ = read_i64(in);
    skipped_ = read_i64(in);
    const int64_t ng = read_i64(in);
    NFF_CHECK(ng == static_cast<int64_t>(groups_.size()), ErrKind::data,
              "optimizer state has ", ng, " groups, expected ", groups_.size());
    for (size_t g = 0; g < groups_.size(); ++g) {
        const int64_t np = read_i64(in);
        NFF_CHECK(np == static_cast<int64_t>(slots_[g].size()), ErrKind::data, "group '",
                  groups_[g].name, "': state has ", np, " params, expected ", slots_[g].size());
        for (Slot& s : slots_[g]) {
            const int64_t n = read_i64(in);
            NFF_CHECK(n == s.m.numel(), ErrKind::data, "group '", groups_[g].name,
                      "': moment size mismatch");
            in.read(reinterpret_cast<char*>(s.m.data()),
                    static_cast<std::streamsize>(sizeof(double)) * n);
            in.read(reinterpret_cast<char*>(s.v.data()),
                    static_cast<std::streamsize>(sizeof(double)) * n);
            NFF_CHECK(in.good(), ErrKind::data, "truncated optimizer state");
        }
    }
}

} // namespace nff
