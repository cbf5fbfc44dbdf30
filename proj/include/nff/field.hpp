// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// The neural feature field and its decoders: an SDF head and feature head on
// top of the actor-aware encoding, alpha compositing along rays, a CNN that
// upsamples camera feature maps to RGB, and small MLPs for lidar intensity
// and ray-drop probability. Sensor appearance embeddings are injected after
// volume rendering, right before each decoder.

#pragma once

#include <memory>
#include <vector>

#include "nff/encoding.hpp"

namespace nff {

struct FieldConfig {
    HashGridConfig static_grid{8, 4, int64_t{1} << 22, 16.0, 2.0, 0};
    HashGridConfig actor_grid{4, 4, int64_t{1} << 15, 8.0, 2.5198420997897464, 0};
    int sh_degree = 3;  // direction encoding, (deg+1)^2 = 16 features
    int hidden = 32;    // hidden dim, all networks
    int n_g = 32;       // intermediate geometry feature
    int feat_dim = 32;  // NFF feature dim
    int embed_dim = 16; // appearance embedding dim
    double beta_init = 20.0;
    double sdf_bias = 0.3; // empty space starts positive
};

struct FieldOutput {
    ad::Var s;               // (N,1) signed distance, positive outside
    ad::Var g;               // (N,n_g)
    ad::Var f;               // (N,feat_dim) view-conditioned feature
    std::vector<int> branch; // -1 static, else actor index
};

struct NffField {
    FieldConfig cfg;
    std::shared_ptr<const GridMeta> smeta, ameta;
    ad::Var static_table, actor_table;
    ad::Var geo_w0, geo_b0, geo_w1, geo_b1;
    ad::Var feat_w0, feat_b0, feat_w1, feat_b1, feat_w2, feat_b2;
    ad::Var log_beta; // (1), beta = exp(log_beta) stays positive

    static NffField create(int n_actors, const FieldConfig& cfg, uint64_t seed);

    // dirs (N,3) unit vectors; in.dirs is ignored (set internally)
    FieldOutput query(const SceneDesc& scene, EncodeInputs in, ad::Var dirs,
                      const ActorCorrections* corr, bool downweighting) const;

    ad::Var beta() const;
    std::vector<ad::Var> params() const;
};

// alpha = 1 / (1 + exp(beta * s)), decreasing in s
ad::Var sdf_to_alpha(ad::Var s, ad::Var beta);

struct CompositeResult {
    ad::Var weights; // (R,S)
    ad::Var feat;    // (R,K) weighted feature sum
    ad::Var depth;   // (R,1) expected depth
};

// alpha (R,S), feats (R*S,K) row-major by ray, midpoints (R,S)
CompositeResult composite(ad::Var alpha, ad::Var feats, const Tensor& midpoints);

// Appearance embeddings, one row per sensor embedding index.
struct Embeddings {
    ad::Var table; // (n,embed_dim)

    static Embeddings create(int count, int dim, uint64_t seed);
    // (rows,dim) all equal to row `index`; throws if out of range
    ad::Var rows(int64_t index, int64_t count) const;
};

// 1x1 conv in (with the sensor embedding folded into its bias), two
// kernel-7 residual blocks, a stride-3 transposed conv, then 1x1 conv to
// sigmoid RGB. No batch statistics anywhere.
struct RgbDecoder {
    int width = 32;
    ad::Var in_w, in_b, emb_w;                 // 1x1 entry + embedding projection
    ad::Var r0a_w, r0a_b, r0b_w, r0b_b;        // residual block 0
    ad::Var r1a_w, r1a_b, r1b_w, r1b_b;        // residual block 1
    ad::Var up_w, up_b;                        // transposed conv, factor 3
    ad::Var out_w, out_b;                      // 1x1 to RGB

    static RgbDecoder create(int feat_dim, int width, int embed_dim, uint64_t seed);

    // fmap (P,H,W,feat_dim), emb (1,embed_dim) -> (P,3H,3W,3) in [0,1]
    ad::Var decode(ad::Var fmap, ad::Var emb) const;

    std::vector<ad::Var> params() const;
};

// Two sigmoid MLP heads over (ray feature, sensor embedding): intensity in
// [0,1] and ray-drop probability in (0,1).
struct LidarDecoder {
    ad::Var int_w0, int_b0, int_w1, int_b1, int_w2, int_b2;
    ad::Var drop_w0, drop_b0, drop_w1, drop_b1, drop_w2, drop_b2;

    static LidarDecoder create(int feat_dim, int hidden, int embed_dim, uint64_t seed);

    struct Out {
        ad::Var intensity; // (R,1)
        ad::Var drop;      // (R,1)
    };
    Out decode(ad::Var feat, ad::Var emb_rows) const;

    std::vector<ad::Var> params() const;
};

} // namespace nff
