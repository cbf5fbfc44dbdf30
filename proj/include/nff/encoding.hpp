// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Actor-aware positional encoding: each sample is routed either through the
// contracted static grid or, when inside an actor box, through the shared 4D
// actor grid in that actor's local frame. Frustum downweighting suppresses
// grid levels finer than the ray footprint.

#pragma once

#include <memory>

#include "nff/ops.hpp"
#include "nff/scene.hpp"

namespace nff {

// Learnable pose corrections, one row per actor keyframe, flattened over all
// actors. rot6 rows start at (1,0,0,0,1,0): the identity correction.
struct ActorCorrections {
    ad::Var rot6;                // (K,6)
    ad::Var trans;               // (K,3)
    std::vector<int64_t> offset; // first row of each actor
};

struct EncodeInputs {
    ad::Var x;                        // (N,3) world positions
    const std::vector<double>* times; // N
    const std::vector<double>* vol;   // N frustum volumes, cubic meters
    ad::Var dirs;                     // optional (N,3) view directions
};

struct EncodeResult {
    ad::Var enc;             // (N, static levels*feat); actor rows zero-padded
    std::vector<int> branch; // -1 static, else actor index
    ad::Var dirs_local;      // dirs rotated into actor frames, when given
};

EncodeResult actor_aware_encode(const SceneDesc& scene, const EncodeInputs& in,
                                ad::Var static_table, std::shared_ptr<const GridMeta> smeta,
                                ad::Var actor_table, std::shared_ptr<const GridMeta> ameta,
                                const ActorCorrections* corr, bool downweighting);

// Per-level downweights for tests and inspection: (levels) for one sample.
std::vector<double> static_level_weights(const GridMeta& m, double scene_radius, const Vec3& x,
                                         double vol);
std::vector<double> actor_level_weights(const GridMeta& m, const Vec3& extents, double vol);

} // namespace nff
