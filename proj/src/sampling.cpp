// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nff/rng.hpp"

namespace nff {

namespace {
// RNG streams owned by this module.
constexpr uint64_t kStreamInit = 40;     // initial edge jitter
constexpr uint64_t kStreamResample = 41; // + round
} // namespace

double power_map(double x) {
    NFF_ASSERT(std::isfinite(x) && x >= 0.0, "power_map needs x >= 0");
    return 2.0 * x / (x + 20.0);
}

double power_unmap(double y) {
    NFF_ASSERT(std::isfinite(y) && y >= 0.0 && y < 2.0, "power_unmap needs y in [0,2)");
    return 20.0 * y / (2.0 - y);
}

std::vector<double> power_spacing(const std::vector<double>& u, double near, double far) {
    NFF_ASSERT(std::isfinite(near) && std::isfinite(far) && 0.0 <= near && near < far,
              "power_spacing needs 0 <= near < far");
    double s0 = power_map(near), s1 = power_map(far);
    std::vector<double> tau(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        NFF_ASSERT(u[i] >= 0.0 && u[i] <= 1.0, "power_spacing needs u in [0,1]");
        if (u[i] <= 0.0) {
            tau[i] = near;
        } else if (u[i] >= 1.0) {
            tau[i] = far;
        } else {
            tau[i] = power_unmap(s0 + u[i] * (s1 - s0));
        }
    }
    return tau;
}

RaySamples initial_edges(const std::vector<double>& near, const std::vector<double>& far,
                         int count, uint64_t seed, const std::vector<int64_t>& ray_uids,
                         bool jitter) {
    int64_t R = static_cast<int64_t>(near.size());
    NFF_ASSERT(far.size() == near.size() && ray_uids.size() == near.size(),
              "initial_edges needs matching near/far/uid sizes");
    NFF_ASSERT(count >= 1, "initial_edges needs count >= 1");
    RaySamples out;
    out.round = 0;
    out.edges = Tensor({R, count + 1});
    std::vector<double> u(static_cast<size_t>(count) + 1);
    for (int64_t r = 0; r < R; ++r) {
        uint64_t base = static_cast<uint64_t>(ray_uids[r]) * (static_cast<uint64_t>(count) + 1);
        u[0] = 0.0;
        u[static_cast<size_t>(count)] = 1.0;
        for (int j = 1; j < count; ++j) {
            double eta =
                jitter ? rng::uniform(seed, kStreamInit, base + static_cast<uint64_t>(j)) : 0.5;
            u[static_cast<size_t>(j)] = (j + eta - 0.5) / count;
        }
        std::vector<double> tau = power_spacing(u, near[static_cast<size_t>(r)],
                                                far[static_cast<size_t>(r)]);
        for (int j = 0; j <= count; ++j) out.edges.at(r, j) = tau[static_cast<size_t>(j)];
    }
    return out;
}

std::vector<double> proposal_resample(const std::vector<double>& weights,
                                      const std::vector<double>& edges, int count, uint64_t seed,
                                      uint64_t stream, uint64_t counter_base) {
    size_t N = weights.size();
    NFF_ASSERT(N >= 1 && edges.size() == N + 1, "proposal_resample shape mismatch");
    NFF_ASSERT(count >= 1, "proposal_resample needs count >= 1");
    double total = 0.0;
    for (size_t i = 0; i < N; ++i) {
        NFF_ASSERT(std::isfinite(weights[i]) && weights[i] >= 0.0,
                  "proposal_resample needs finite nonnegative weights");
        NFF_ASSERT(edges[i + 1] > edges[i], "proposal_resample needs increasing edges");
        total += weights[i];
    }
    // Padded weights keep the CDF strictly increasing; all-zero histograms
    // degrade to uniform sampling.
    std::vector<double> w(N);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(N));
        total = 1.0;
    } else {
        double pad = 1e-9 * total / static_cast<double>(N);
        for (size_t i = 0; i < N; ++i) w[i] = weights[i] + pad;
        total += 1e-9 * total;
    }
    std::vector<double> cdf(N + 1, 0.0);
    for (size_t i = 0; i < N; ++i) cdf[i + 1] = cdf[i] + w[i];
    total = cdf[N];

    std::vector<double> out(static_cast<size_t>(count) + 1);
    size_t k = 0;
    for (int j = 0; j <= count; ++j) {
        double eta = rng::uniform(seed, stream, counter_base + static_cast<uint64_t>(j));
        double target = (j + eta) / (count + 1) * total;
        while (k + 1 < N && cdf[k + 1] <= target) ++k;
        double tau = edges[k] + (target - cdf[k]) / w[k] * (edges[k + 1] - edges[k]);
        tau = std::min(tau, edges[N]);
        if (j > 0 && tau <= out[static_cast<size_t>(j) - 1])
            tau = std::nextafter(out[static_cast<size_t>(j) - 1],
                                 std::numeric_limits<double>::infinity());
        out[static_cast<size_t>(j)] = tau;
    }
    return out;
}

RaySamples resample_batch(const Tensor& weights, const Tensor& edges, int count, uint64_t seed,
                          int round, const std::vector<int64_t>& ray_uids) {
    NFF_ASSERT(weights.rank() == 2 && edges.rank() == 2 && edges.size(0) == weights.size(0) &&
                  edges.size(1) == weights.size(1) + 1,
              "resample_batch shape mismatch");
    int64_t R = weights.size(0), N = weights.size(1);
    NFF_ASSERT(static_cast<int64_t>(ray_uids.size()) == R, "resample_batch needs one uid per ray");
    NFF_ASSERT(round >= 1, "resample_batch rounds start at 1");
    RaySamples out;
    out.round = round;
    out.edges = Tensor({R, count + 1});
    std::vector<double> w(static_cast<size_t>(N)), e(static_cast<size_t>(N) + 1);
    for (int64_t r = 0; r < R; ++r) {
        for (int64_t i = 0; i < N; ++i) w[static_cast<size_t>(i)] = weights.at(r, i);
        for (int64_t i = 0; i <= N; ++i) e[static_cast<size_t>(i)] = edges.at(r, i);
        uint64_t base = static_cast<uint64_t>(ray_uids[r]) * (static_cast<uint64_t>(count) + 1);
        std::vector<double> ne = proposal_resample(
            w, e, count, seed, kStreamResample + static_cast<uint64_t>(round), base);
        for (int j = 0; j <= count; ++j) out.edges.at(r, j) = ne[static_cast<size_t>(j)];
    }
    return out;
}

Tensor edge_widths(const Tensor& edges) {
    NFF_ASSERT(edges.rank() == 2 && edges.size(1) >= 2, "edge_widths needs (R,N+1)");
    int64_t R = edges.size(0), N = edges.size(1) - 1;
    Tensor out({R, N});
    for (int64_t r = 0; r < R; ++r)
        for (int64_t i = 0; i < N; ++i) out.at(r, i) = edges.at(r, i + 1) - edges.at(r, i);
    return out;
}

Tensor edge_midpoints(const Tensor& edges) {
    NFF_ASSERT(edges.rank() == 2 && edges.size(1) >= 2, "edge_midpoints needs (R,N+1)");
    int64_t R = edges.size(0), N = edges.size(1) - 1;
    Tensor out({R, N});
    for (int64_t r = 0; r < R; ++r)
        for (int64_t i = 0; i < N; ++i)
            out.at(r, i) = 0.5 * (edges.at(r, i) + edges.at(r, i + 1));
    return out;
}

ad::Var alpha_from_density(ad::Var sigma, const Tensor& dtau) {
    NFF_ASSERT(sigma->value.same_shape(dtau), "alpha_from_density shape mismatch");
    return ad::shift(ad::neg(ad::exp_(ad::neg(ad::mul_const(sigma, dtau)))), 1.0);
}

Tensor interlevel_bound(const Tensor& prop_edges, const Tensor& final_w,
                        const Tensor& final_edges, bool blur) {
    NFF_ASSERT(prop_edges.rank() == 2 && final_w.rank() == 2 && final_edges.rank() == 2,
              "interlevel_bound needs rank-2 tensors");
    int64_t R = prop_edges.size(0), Np = prop_edges.size(1) - 1, Nf = final_w.size(1);
    NFF_ASSERT(final_w.size(0) == R && final_edges.size(0) == R &&
                  final_edges.size(1) == Nf + 1 && Np >= 1 && Nf >= 1,
              "interlevel_bound shape mismatch");
    Tensor out({R, Np});
    for (int64_t r = 0; r < R; ++r) {
        for (int64_t i = 0; i < Np; ++i) {
            double p0 = prop_edges.at(r, i), p1 = prop_edges.at(r, i + 1);
            double acc = 0.0;
            for (int64_t k = 0; k < Nf; ++k) {
                double lo = final_edges.at(r, k), hi = final_edges.at(r, k + 1);
                if (blur) {
                    double d = hi - lo;
                    lo -= d;
                    hi += d;
                }
                if (lo >= p1) {
                    if (!blur) break; // final edges sorted, nothing further overlaps
                    continue;
                }
                double width = hi - lo;
                if (width <= 0.0) continue;
                double a = std::max(lo, p0), b = std::min(hi, p1);
                if (b > a) acc += final_w.at(r, k) * (b - a) / width;
            }
            out.at(r, i) = acc;
        }
    }
    return out;
}

ad::Var interlevel_loss(ad::Var prop_w, const Tensor& prop_edges, const Tensor& final_w,
                        const Tensor& final_edges, bool blur) {
    NFF_ASSERT(prop_w->value.rank() == 2 && prop_w->value.size(0) == prop_edges.size(0) &&
                  prop_w->value.size(1) == prop_edges.size(1) - 1,
              "interlevel_loss shape mismatch");
    Tensor bound = interlevel_bound(prop_edges, final_w, final_edges, blur);
    ad::Var gap = ad::relu(ad::sub(ad::make_const(std::move(bound)), prop_w));
    ad::Var per = ad::div_eps(ad::mul(gap, gap), prop_w, 1e-3);
    double rows = static_cast<double>(prop_w->value.size(0));
    return ad::scale(ad::sum(per), 1.0 / rows);
}

ProposalField ProposalField::create(int n_actors, HashGridConfig stat, HashGridConfig actor,
                                    uint64_t seed) {
    NFF_ASSERT(stat.feat == 1 && actor.feat == 1, "proposal grids use one feature per level");
    NFF_ASSERT(stat.levels == actor.levels, "proposal grids need matching level counts");
    stat.n_actors = 0;
    actor.n_actors = std::max(1, n_actors);
    ProposalField f;
    f.smeta = std::make_shared<GridMeta>(GridMeta::build(stat));
    f.ameta = std::make_shared<GridMeta>(GridMeta::build(actor));
    auto init_table = [&](const GridMeta& m, uint64_t stream) {
        Tensor t({m.total_rows, m.cfg.feat});
        for (int64_t i = 0; i < t.numel(); ++i)
            t.data()[i] = 1e-4 * (2.0 * rng::uniform(seed, stream, static_cast<uint64_t>(i)) - 1.0);
        return ad::make_param(std::move(t));
    };
    f.static_table = init_table(*f.smeta, 50);
    f.actor_table = init_table(*f.ameta, 51);
    int64_t W = static_cast<int64_t>(stat.levels) * stat.feat;
    Tensor lw({W, 1});
    for (int64_t i = 0; i < W; ++i)
        lw.data()[i] = rng::normal(seed, 52, static_cast<uint64_t>(i)) / std::sqrt(double(W));
    f.lin_w = ad::make_param(std::move(lw));
    f.lin_b = ad::make_param(Tensor({int64_t{1}}, 0.0));
    return f;
}

ad::Var ProposalField::density(const SceneDesc& scene, const EncodeInputs& in,
                               const ActorCorrections* corr, bool downweighting) const {
    EncodeResult enc =
        actor_aware_encode(scene, in, static_table, smeta, actor_table, ameta, corr, downweighting);
    return ad::softplus(ad::linear(enc.enc, lin_w, lin_b));
}

std::vector<ad::Var> ProposalField::params() const {
    return {static_table, actor_table, lin_w, lin_b};
}

ad::Var proposal_weights(ad::Var sigma_rows, const Tensor& edges) {
    NFF_ASSERT(sigma_rows->value.rank() == 2 && edges.rank() == 2 &&
                  sigma_rows->value.size(0) == edges.size(0) &&
                  sigma_rows->value.size(1) == edges.size(1) - 1,
              "proposal_weights shape mismatch");
    return ad::composite_weights(alpha_from_density(sigma_rows, edge_widths(edges)));
}

} // namespace nff
