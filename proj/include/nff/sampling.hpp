// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Ray sampling: power-function spacing along rays, stratified inverse-CDF
// resampling driven by proposal weights, the interlevel loss that distills
// the final weight distribution into the proposals, and the lightweight
// proposal density fields themselves.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nff/encoding.hpp"

namespace nff {

// Power transform P(0.1 x, -1) = 2x / (x + 20): near-linear close to the
// sensor, approaching inverse-depth spacing far away.
double power_map(double x);
double power_unmap(double y);

// Maps u in [0,1] to distances in [near, far]: u=0 -> near, u=1 -> far,
// spacing non-decreasing with distance.
std::vector<double> power_spacing(const std::vector<double>& u, double near, double far);

struct RaySamples {
    Tensor edges; // (rays, count+1) distances, strictly increasing
    int round = 0; // 0 initial, then one per resample
};

// Power-spaced initial edges, one row per ray. With jitter the interior
// edges move within their strata (endpoints stay pinned to near/far);
// stream/counter derive from (seed, round 0, ray uid, edge).
RaySamples initial_edges(const std::vector<double>& near, const std::vector<double>& far,
                         int count, uint64_t seed, const std::vector<int64_t>& ray_uids,
                         bool jitter);

// Stratified inverse-CDF resampling of count new intervals from a weight
// histogram. All-zero weights fall back to uniform. Deterministic given
// (seed, stream, counter_base): edge j uses counter counter_base + j.
std::vector<double> proposal_resample(const std::vector<double>& weights,
                                      const std::vector<double>& edges, int count, uint64_t seed,
                                      uint64_t stream, uint64_t counter_base = 0);

// Batched resampling; round selects the RNG stream so repeated rounds on the
// same ray decorrelate. weights (R,N), edges (R,N+1) -> edges (R,count+1).
RaySamples resample_batch(const Tensor& weights, const Tensor& edges, int count, uint64_t seed,
                          int round, const std::vector<int64_t>& ray_uids);

Tensor edge_widths(const Tensor& edges);    // (R,N+1) -> (R,N)
Tensor edge_midpoints(const Tensor& edges); // (R,N+1) -> (R,N)

// alpha_i = 1 - exp(-sigma_i * dtau_i)
ad::Var alpha_from_density(ad::Var sigma, const Tensor& dtau);

// Mass of the final histogram overlapping each proposal interval. With blur
// each final interval is smeared over three times its width before the
// overlap integral, which forgives small misalignments.
Tensor interlevel_bound(const Tensor& prop_edges, const Tensor& final_w,
                        const Tensor& final_edges, bool blur);

// mean_r sum_i relu(bound_i - w_i)^2 / (w_i + 1e-3). The bound is a
// constant: gradients reach the proposal weights only.
ad::Var interlevel_loss(ad::Var prop_w, const Tensor& prop_edges, const Tensor& final_w,
                        const Tensor& final_edges, bool blur);

// Hash-encoded density field used by the proposal rounds: one feature per
// level and a single linear layer decoded through softplus.
struct ProposalField {
    std::shared_ptr<const GridMeta> smeta, ameta;
    ad::Var static_table, actor_table;
    ad::Var lin_w, lin_b;

    static ProposalField create(int n_actors, HashGridConfig stat, HashGridConfig actor,
                                uint64_t seed);

    // (N,1) nonnegative densities
    ad::Var density(const SceneDesc& scene, const EncodeInputs& in, const ActorCorrections* corr,
                    bool downweighting) const;

    std::vector<ad::Var> params() const;
};

// Compositing weights for one proposal round: alpha from the density at the
// interval midpoints, then front-to-back transmittance.
ad::Var proposal_weights(ad::Var sigma_rows, const Tensor& edges);

} // namespace nff
