// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/field.hpp"

#include <cmath>

#include "nff/rng.hpp"

namespace nff {

using ad::Var;

namespace {

// RNG streams owned by this module.
constexpr uint64_t kStreamTables = 60; // +1 for the actor table
constexpr uint64_t kStreamMlp = 62;    // one per layer, 62..79
constexpr uint64_t kStreamEmbed = 80;
constexpr uint64_t kStreamCnn = 81; // one per conv, 81..89

Var he_weights(Shape shape, int64_t fan_in, uint64_t seed, uint64_t stream) {
    Tensor t(shape);
    double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i)
        t.data()[i] = sd * rng::normal(seed, stream, static_cast<uint64_t>(i));
    return ad::make_param(std::move(t));
}

Var zeros(Shape shape) { return ad::make_param(Tensor(std::move(shape), 0.0)); }

Var grid_table(const GridMeta& m, uint64_t seed, uint64_t stream) {
    Tensor t({m.total_rows, static_cast<int64_t>(m.cfg.feat)});
    for (int64_t i = 0; i < t.numel(); ++i)
        t.data()[i] = 1e-4 * (2.0 * rng::uniform(seed, stream, static_cast<uint64_t>(i)) - 1.0);
    return ad::make_param(std::move(t));
}

} // namespace

NffField NffField::create(int n_actors, const FieldConfig& cfg, uint64_t seed) {
    NffField f;
    f.cfg = cfg;
    HashGridConfig sg = cfg.static_grid, ag = cfg.actor_grid;
    sg.n_actors = 0;
    ag.n_actors = std::max(1, n_actors);
    f.smeta = std::make_shared<GridMeta>(GridMeta::build(sg));
    f.ameta = std::make_shared<GridMeta>(GridMeta::build(ag));
    f.static_table = grid_table(*f.smeta, seed, kStreamTables);
    f.actor_table = grid_table(*f.ameta, seed, kStreamTables + 1);

    int64_t enc_w = static_cast<int64_t>(sg.levels) * sg.feat;
    int64_t hid = cfg.hidden, ng = cfg.n_g, fd = cfg.feat_dim;
    int64_t sh = (cfg.sh_degree + 1) * (cfg.sh_degree + 1);
    f.geo_w0 = he_weights({enc_w, hid}, enc_w, seed, kStreamMlp);
    f.geo_b0 = zeros({hid});
    f.geo_w1 = he_weights({hid, 1 + ng}, hid, seed, kStreamMlp + 1);
    Tensor gb1({1 + ng}, 0.0);
    gb1.at(0) = cfg.sdf_bias;
    f.geo_b1 = ad::make_param(std::move(gb1));

    f.feat_w0 = he_weights({sh + ng, hid}, sh + ng, seed, kStreamMlp + 2);
    f.feat_b0 = zeros({hid});
    f.feat_w1 = he_weights({hid + ng, hid}, hid + ng, seed, kStreamMlp + 3);
    f.feat_b1 = zeros({hid});
    f.feat_w2 = he_weights({hid, fd}, hid, seed, kStreamMlp + 4);
    f.feat_b2 = zeros({fd});

    f.log_beta = ad::make_param(Tensor({int64_t{1}}, std::log(cfg.beta_init)));
    return f;
}

Var NffField::beta() const { return ad::exp_(log_beta); }

FieldOutput NffField::query(const SceneDesc& scene, EncodeInputs in, Var dirs,
                            const ActorCorrections* corr, bool downweighting) const {
    NFF_ASSERT(dirs && dirs->value.rank() == 2 && dirs->value.size(1) == 3 &&
                   dirs->value.size(0) == in.x->value.size(0),
               "query needs one unit direction per sample");
    in.dirs = std::move(dirs);
    EncodeResult enc =
        actor_aware_encode(scene, in, static_table, smeta, actor_table, ameta, corr, downweighting);

    Var h = ad::relu(ad::linear(enc.enc, geo_w0, geo_b0));
    Var sg = ad::linear(std::move(h), geo_w1, geo_b1);
    FieldOutput out;
    out.branch = std::move(enc.branch);
    out.s = ad::slice_cols(sg, 0, 1);
    out.g = ad::slice_cols(std::move(sg), 1, 1 + cfg.n_g);

    Var shd = ad::sh_encode(enc.dirs_local, cfg.sh_degree);
    Var h1 = ad::relu(ad::linear(ad::concat_cols({std::move(shd), out.g}), feat_w0, feat_b0));
    Var h2 = ad::relu(ad::linear(ad::concat_cols({std::move(h1), out.g}), feat_w1, feat_b1));
    out.f = ad::linear(std::move(h2), feat_w2, feat_b2);
    return out;
}

std::vector<Var> NffField::params() const {
    return {static_table, actor_table, geo_w0, geo_b0, geo_w1, geo_b1, feat_w0,
            feat_b0,      feat_w1,     feat_b1, feat_w2, feat_b2, log_beta};
}

Var sdf_to_alpha(Var s, Var beta) {
    return ad::sigmoid(ad::neg(ad::mul_scalar_var(std::move(s), std::move(beta))));
}

CompositeResult composite(Var alpha, Var feats, const Tensor& midpoints) {
    NFF_ASSERT(alpha->value.rank() == 2 && alpha->value.same_shape(midpoints),
               "composite needs alpha (R,S) matching midpoints");
    int64_t R = alpha->value.size(0), S = alpha->value.size(1);
    NFF_ASSERT(feats->value.rank() == 2 && feats->value.size(0) == R * S,
               "composite needs feats (R*S,K)");
    int64_t K = feats->value.size(1);
    CompositeResult out;
    out.weights = ad::composite_weights(std::move(alpha));
    out.feat = ad::weighted_reduce(out.weights, ad::reshape(std::move(feats), {R, S, K}));
    Tensor mid = midpoints;
    out.depth = ad::weighted_reduce(out.weights, ad::reshape(ad::make_const(std::move(mid)),
                                                             {R, S, int64_t{1}}));
    return out;
}

Embeddings Embeddings::create(int count, int dim, uint64_t seed) {
    NFF_ASSERT(count >= 1 && dim >= 1, "embeddings need count and dim");
    Tensor t({count, dim});
    for (int64_t i = 0; i < t.numel(); ++i)
        t.data()[i] = 0.1 * rng::normal(seed, kStreamEmbed, static_cast<uint64_t>(i));
    Embeddings e;
    e.table = ad::make_param(std::move(t));
    return e;
}

Var Embeddings::rows(int64_t index, int64_t count) const {
    NFF_CHECK(index >= 0 && index < table->value.size(0), ErrKind::config,
              "unknown sensor embedding index");
    auto idx = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(count), index);
    return ad::gather_rows(table, idx);
}

RgbDecoder RgbDecoder::create(int feat_dim, int width, int embed_dim, uint64_t seed) {
    RgbDecoder d;
    d.width = width;
    int64_t w = width, fd = feat_dim, ed = embed_dim;
    d.in_w = he_weights({1, 1, fd, w}, fd + ed, seed, kStreamCnn);
    d.in_b = zeros({w});
    d.emb_w = he_weights({ed, w}, fd + ed, seed, kStreamCnn + 1);
    d.r0a_w = he_weights({7, 7, w, w}, 49 * w, seed, kStreamCnn + 2);
    d.r0a_b = zeros({w});
    d.r0b_w = he_weights({7, 7, w, w}, 49 * w, seed, kStreamCnn + 3);
    d.r0b_b = zeros({w});
    d.r1a_w = he_weights({7, 7, w, w}, 49 * w, seed, kStreamCnn + 4);
    d.r1a_b = zeros({w});
    d.r1b_w = he_weights({7, 7, w, w}, 49 * w, seed, kStreamCnn + 5);
    d.r1b_b = zeros({w});
    d.up_w = he_weights({3, 3, w, w}, w, seed, kStreamCnn + 6);
    d.up_b = zeros({w});
    d.out_w = he_weights({1, 1, w, 3}, w, seed, kStreamCnn + 7);
    d.out_b = zeros({3});
    return d;
}

Var RgbDecoder::decode(Var fmap, Var emb) const {
    NFF_ASSERT(fmap->value.rank() == 4, "decode needs a (P,H,W,C) feature map");
    NFF_ASSERT(emb->value.rank() == 2 && emb->value.size(0) == 1 &&
                   emb->value.size(1) == emb_w->value.size(0),
               "decode needs a single embedding row");
    // concat(fmap, broadcast emb) through a 1x1 conv equals a 1x1 conv on
    // fmap whose bias depends on the embedding
    Var bias = ad::reshape(ad::add(ad::linear(emb, emb_w, nullptr),
                                   ad::reshape(in_b, {int64_t{1}, in_b->value.size(0)})),
                           {in_b->value.size(0)});
    Var x = ad::conv2d(fmap, in_w, std::move(bias), 0);
    auto block = [](Var h, const Var& wa, const Var& ba, const Var& wb, const Var& bb) {
        Var y = ad::conv2d(h, wa, ba, 3);
        y = ad::relu(std::move(y));
        y = ad::conv2d(std::move(y), wb, bb, 3);
        return ad::add(std::move(h), std::move(y));
    };
    x = block(std::move(x), r0a_w, r0a_b, r0b_w, r0b_b);
    x = block(std::move(x), r1a_w, r1a_b, r1b_w, r1b_b);
    x = ad::convt3(std::move(x), up_w, up_b);
    return ad::sigmoid(ad::conv2d(std::move(x), out_w, out_b, 0));
}

std::vector<Var> RgbDecoder::params() const {
    return {in_w,  in_b,  emb_w, r0a_w, r0a_b, r0b_w, r0b_b, r1a_w,
            r1a_b, r1b_w, r1b_b, up_w,  up_b,  out_w, out_b};
}

LidarDecoder LidarDecoder::create(int feat_dim, int hidden, int embed_dim, uint64_t seed) {
    LidarDecoder d;
    int64_t in = feat_dim + embed_dim, h = hidden;
    d.int_w0 = he_weights({in, h}, in, seed, 70);
    d.int_b0 = zeros({h});
    d.int_w1 = he_weights({h, h}, h, seed, 71);
    d.int_b1 = zeros({h});
    d.int_w2 = he_weights({h, int64_t{1}}, h, seed, 72);
    d.int_b2 = zeros({int64_t{1}});
    d.drop_w0 = he_weights({in, h}, in, seed, 73);
    d.drop_b0 = zeros({h});
    d.drop_w1 = he_weights({h, h}, h, seed, 74);
    d.drop_b1 = zeros({h});
    d.drop_w2 = he_weights({h, int64_t{1}}, h, seed, 75);
    d.drop_b2 = zeros({int64_t{1}});
    return d;
}

LidarDecoder::Out LidarDecoder::decode(Var feat, Var emb_rows) const {
    NFF_ASSERT(feat->value.rank() == 2 && emb_rows->value.rank() == 2 &&
                   feat->value.size(0) == emb_rows->value.size(0),
               "lidar decode needs matching feature and embedding rows");
    Var in = ad::concat_cols({std::move(feat), std::move(emb_rows)});
    auto mlp = [&in](const Var& w0, const Var& b0, const Var& w1, const Var& b1, const Var& w2,
                     const Var& b2) {
        Var h = ad::relu(ad::linear(in, w0, b0));
        h = ad::relu(ad::linear(std::move(h), w1, b1));
        return ad::sigmoid(ad::linear(std::move(h), w2, b2));
    };
    Out out;
    out.intensity = mlp(int_w0, int_b0, int_w1, int_b1, int_w2, int_b2);
    out.drop = mlp(drop_w0, drop_b0, drop_w1, drop_b1, drop_w2, drop_b2);
    return out;
}

std::vector<Var> LidarDecoder::params() const {
    return {int_w0,  int_b0,  int_w1,  int_b1,  int_w2,  int_b2,
            drop_w0, drop_b0, drop_w1, drop_b1, drop_w2, drop_b2};
}

} // namespace nff
