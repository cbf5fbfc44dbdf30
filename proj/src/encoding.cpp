// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/encoding.hpp"

namespace nff {

using ad::Var;

std::vector<double> static_level_weights(const GridMeta& m, double scene_radius, const Vec3& x,
                                         double vol) {
    std::vector<double> w;
    double n = x.norm() / scene_radius;
    for (int64_t r : m.res) w.push_back(downweight(static_cells_per_meter(r, scene_radius, n), vol));
    return w;
}

std::vector<double> actor_level_weights(const GridMeta& m, const Vec3& extents, double vol) {
    std::vector<double> w;
    for (int64_t r : m.res) w.push_back(downweight(actor_cells_per_meter(r, extents), vol));
    return w;
}

namespace {

// expand per-level weights to a (rows, levels*feat) multiplier
Tensor expand_level_weights(const std::vector<std::vector<double>>& w, int64_t feat) {
    int64_t rows = static_cast<int64_t>(w.size());
    int64_t levels = rows ? static_cast<int64_t>(w[0].size()) : 0;
    Tensor out({rows, levels * feat});
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t l = 0; l < levels; ++l)
            for (int64_t f = 0; f < feat; ++f)
                out.at(i, l * feat + f) = w[static_cast<size_t>(i)][static_cast<size_t>(l)];
    return out;
}

// lerp of per-keyframe correction rows at each sample
Var lerp_rows(Var params, const std::shared_ptr<std::vector<int64_t>>& k0,
              const std::shared_ptr<std::vector<int64_t>>& k1, const Tensor& w0, const Tensor& w1) {
    Var a = ad::scale_rows_const(ad::gather_rows(params, k0), w0);
    Var b = ad::scale_rows_const(ad::gather_rows(params, k1), w1);
    return ad::add(std::move(a), std::move(b));
}

} // namespace

EncodeResult actor_aware_encode(const SceneDesc& scene, const EncodeInputs& in,
                                Var static_table, std::shared_ptr<const GridMeta> smeta,
                                Var actor_table, std::shared_ptr<const GridMeta> ameta,
                                const ActorCorrections* corr, bool downweighting) {
    const Tensor& xv = in.x->value;
    NFF_ASSERT(xv.rank() == 2 && xv.size(1) == 3, "encode expects x (N,3)");
    const int64_t N = xv.size(0);
    NFF_ASSERT(static_cast<int64_t>(in.times->size()) == N &&
                   static_cast<int64_t>(in.vol->size()) == N,
               "encode times/volumes must match x");
    const int64_t F = smeta->cfg.feat;
    const int64_t W = static_cast<int64_t>(smeta->cfg.levels) * F;
    const int64_t Wa = static_cast<int64_t>(ameta->cfg.levels) * ameta->cfg.feat;
    NFF_CHECK(Wa <= W, ErrKind::config, "actor encoding wider than static encoding");

    EncodeResult res;
    res.branch.resize(static_cast<size_t>(N));
    auto sidx = std::make_shared<std::vector<int64_t>>();
    auto aidx = std::make_shared<std::vector<int64_t>>();
    for (int64_t i = 0; i < N; ++i) {
        Vec3 p(xv.at(i, 0), xv.at(i, 1), xv.at(i, 2));
        int b = scene.classify(p, (*in.times)[static_cast<size_t>(i)]);
        res.branch[static_cast<size_t>(i)] = b;
        (b < 0 ? sidx : aidx)->push_back(i);
    }

    Var enc_s, enc_a, ds_local, da_local;
    if (!sidx->empty()) {
        if (in.dirs) ds_local = aidx->empty() ? in.dirs : ad::gather_rows(in.dirs, sidx);
        Var xs = aidx->empty() ? in.x : ad::gather_rows(in.x, sidx);
        Var u = ad::contract01(xs, scene.scene_radius);
        enc_s = ad::hash_interp(static_table, u, smeta, nullptr);
        if (downweighting) {
            std::vector<std::vector<double>> w;
            w.reserve(sidx->size());
            for (int64_t i : *sidx)
                w.push_back(static_level_weights(*smeta, scene.scene_radius,
                                                 Vec3(xv.at(i, 0), xv.at(i, 1), xv.at(i, 2)),
                                                 (*in.vol)[static_cast<size_t>(i)]));
            enc_s = ad::mul_const(enc_s, expand_level_weights(w, F));
        }
    }

    if (!aidx->empty()) {
        const int64_t Na = static_cast<int64_t>(aidx->size());
        // per-sample constants from the annotated trajectories
        Tensor r_ann({Na, 9}), t_ann({Na, 3}), recip_ext({Na, 3});
        auto actor_of = std::make_shared<std::vector<int64_t>>();
        auto k0 = std::make_shared<std::vector<int64_t>>();
        auto k1 = std::make_shared<std::vector<int64_t>>();
        Tensor w0({Na}), w1({Na}), sym_mask({Na, 1});
        bool any_sym = false;
        for (int64_t r = 0; r < Na; ++r) {
            int64_t i = (*aidx)[static_cast<size_t>(r)];
            int b = res.branch[static_cast<size_t>(i)];
            const ActorTrajectory& act = scene.actors[static_cast<size_t>(b)];
            double ti = (*in.times)[static_cast<size_t>(i)];
            Pose pose = act.track.at(ti);
            Mat3 R = pose.rotation();
            for (int c = 0; c < 3; ++c)
                for (int cc = 0; cc < 3; ++cc) r_ann.at(r, 3 * c + cc) = R(c, cc);
            for (int c = 0; c < 3; ++c) t_ann.at(r, c) = pose.t(c);
            for (int c = 0; c < 3; ++c) recip_ext.at(r, c) = 1.0 / act.extents(c);
            actor_of->push_back(b);
            auto [seg, uu] = act.track.locate(ti);
            size_t last = act.track.times.size() - 1;
            int64_t base = corr ? corr->offset[static_cast<size_t>(b)] : 0;
            k0->push_back(base + static_cast<int64_t>(seg));
            k1->push_back(base + static_cast<int64_t>(std::min(seg + 1, last)));
            w0[r] = 1.0 - uu;
            w1[r] = uu;
            sym_mask.at(r, 0) = act.symmetric ? 1.0 : 0.0;
            any_sym = any_sym || act.symmetric;
        }

        Var xa = sidx->empty() ? in.x : ad::gather_rows(in.x, aidx);
        Var xl, r_t;
        if (corr) {
            Var rc6 = lerp_rows(corr->rot6, k0, k1, w0, w1);
            Var r_eff = ad::rot_compose(ad::make_const(r_ann), ad::rot6d(std::move(rc6)));
            Var dt = lerp_rows(corr->trans, k0, k1, w0, w1);
            Var t_eff = ad::add(ad::make_const(t_ann),
                                ad::rot_apply(ad::make_const(r_ann), std::move(dt)));
            static const auto kTransp =
                std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{0, 3, 6, 1, 4, 7, 2, 5, 8});
            r_t = ad::perm_cols(std::move(r_eff), kTransp);
            xl = ad::rot_apply(r_t, ad::sub(std::move(xa), std::move(t_eff)));
        } else {
            // transpose the constant rotations directly
            Tensor rt({Na, 9});
            for (int64_t r = 0; r < Na; ++r)
                for (int c = 0; c < 3; ++c)
                    for (int cc = 0; cc < 3; ++cc) rt.at(r, 3 * c + cc) = r_ann.at(r, 3 * cc + c);
            r_t = ad::make_const(std::move(rt));
            xl = ad::rot_apply(r_t, ad::sub(std::move(xa), ad::make_const(t_ann)));
        }
        if (in.dirs) da_local = ad::rot_apply(r_t, ad::gather_rows(in.dirs, aidx));
        Var u = ad::shift(ad::mul_const(std::move(xl), recip_ext), 0.5);
        if (any_sym) {
            // mirror across the local y=0 plane for symmetric actors
            Var uy = ad::slice_cols(u, 1, 2);
            Var c = ad::shift(uy, -0.5);
            Var m = ad::add(ad::relu(c), ad::relu(ad::neg(c)));
            Var delta = ad::sub(ad::shift(std::move(m), 0.5), uy);
            Var uy2 = ad::add(std::move(uy), ad::mul_const(std::move(delta), sym_mask));
            u = ad::concat_cols({ad::slice_cols(u, 0, 1), std::move(uy2), ad::slice_cols(u, 2, 3)});
        }
        enc_a = ad::hash_interp(actor_table, u, ameta, actor_of);
        if (downweighting) {
            std::vector<std::vector<double>> w;
            w.reserve(static_cast<size_t>(Na));
            for (int64_t r = 0; r < Na; ++r) {
                int64_t i = (*aidx)[static_cast<size_t>(r)];
                const ActorTrajectory& act =
                    scene.actors[static_cast<size_t>(res.branch[static_cast<size_t>(i)])];
                w.push_back(
                    actor_level_weights(*ameta, act.extents, (*in.vol)[static_cast<size_t>(i)]));
            }
            enc_a = ad::mul_const(enc_a, expand_level_weights(w, ameta->cfg.feat));
        }
        if (Wa < W)
            enc_a = ad::concat_cols({enc_a, ad::make_const(Tensor({Na, W - Wa}))});
    }

    if (aidx->empty()) {
        res.enc = enc_s;
        res.dirs_local = ds_local;
    } else if (sidx->empty()) {
        res.enc = enc_a;
        res.dirs_local = da_local;
    } else {
        auto perm = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(N));
        for (size_t r = 0; r < sidx->size(); ++r)
            (*perm)[static_cast<size_t>((*sidx)[r])] = static_cast<int64_t>(r);
        for (size_t r = 0; r < aidx->size(); ++r)
            (*perm)[static_cast<size_t>((*aidx)[r])] =
                static_cast<int64_t>(sidx->size() + r);
        res.enc = ad::gather_rows(ad::concat_rows({enc_s, enc_a}), perm);
        if (in.dirs)
            res.dirs_local = ad::gather_rows(ad::concat_rows({ds_local, da_local}), perm);
    }
    return res;
}

} // namespace nff
