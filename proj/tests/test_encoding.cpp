// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "nff/encoding.hpp"

using namespace nff;
using ad::Var;

namespace {

// table value depends only on the row index so lookups are easy to predict
Tensor ramp_table(const GridMeta& m) {
    Tensor t({m.total_rows, static_cast<int64_t>(m.cfg.feat)});
    for (int64_t r = 0; r < m.total_rows; ++r)
        for (int64_t f = 0; f < m.cfg.feat; ++f)
            t.at(r, f) = 0.01 * static_cast<double>(r) + 10.0 * f;
    return t;
}

SceneDesc one_actor_scene(bool symmetric) {
    SceneDesc s;
    s.name = "unit";
    s.scene_radius = 10.0;
    ActorTrajectory a;
    a.extents = Vec3(4, 2, 2);
    a.symmetric = symmetric;
    a.track.add(0.0, Pose{Quat::Identity(), Vec3(5, 0, 0)});
    a.track.add(1.0, Pose{Quat(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ())), Vec3(5, 5, 0)});
    s.actors.push_back(a);
    return s;
}

Tensor pts_tensor(const std::vector<Vec3>& pts) {
    Tensor x({static_cast<int64_t>(pts.size()), 3});
    for (size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < 3; ++c) x.at(static_cast<int64_t>(i), c) = pts[i](c);
    return x;
}

EncodeResult encode_simple(const SceneDesc& s, const std::vector<Vec3>& pts,
                           const std::vector<double>& times, Var st,
                           std::shared_ptr<const GridMeta> sm, Var at,
                           std::shared_ptr<const GridMeta> am,
                           const ActorCorrections* corr = nullptr, bool dw = false) {
    std::vector<double> vol(pts.size(), 1e-6);
    EncodeInputs in{ad::make_const(pts_tensor(pts)), &times, &vol, {}};
    EncodeResult r = actor_aware_encode(s, in, std::move(st), std::move(sm), std::move(at),
                                        std::move(am), corr, dw);
    ad::forward_eval(r.enc);
    return r;
}

} // namespace

TEST_CASE("grid meta layout") {
    GridMeta m = GridMeta::build({8, 4, 1 << 16, 16.0, 1.5, 0});
    REQUIRE(m.res.size() == 8);
    CHECK(m.res[0] == 16);
    int64_t off = 0;
    for (size_t l = 0; l < 8; ++l) {
        if (l) CHECK(m.res[l] > m.res[l - 1]);
        int64_t vtx = (m.res[l] + 1) * (m.res[l] + 1) * (m.res[l] + 1);
        if (vtx <= (1 << 16)) {
            CHECK(m.dense[l]);
            CHECK(m.rows[l] == vtx);
        } else {
            CHECK(!m.dense[l]);
            CHECK(m.rows[l] == (1 << 16));
        }
        CHECK(m.row_off[l] == off);
        off += m.rows[l];
    }
    CHECK(m.total_rows == off);
}

TEST_CASE("grid meta forces strictly increasing resolutions") {
    GridMeta m = GridMeta::build({3, 2, 1 << 10, 16.0, 1.0, 0});
    CHECK(m.res[0] == 16);
    CHECK(m.res[1] == 17);
    CHECK(m.res[2] == 18);
}

TEST_CASE("grid meta actor storage counts every actor copy") {
    GridMeta m = GridMeta::build({2, 2, 1 << 15, 16.0, 1.5, 3});
    CHECK(m.dense[0]); // 17^3 * 3 = 14739 rows fit
    CHECK(m.rows[0] == 17 * 17 * 17 * 3);
    CHECK(!m.dense[1]); // 25^3 * 3 does not
    CHECK(m.rows[1] == (1 << 15));
}

TEST_CASE("grid meta rejects bad configs") {
    CHECK_THROWS_AS(GridMeta::build({8, 4, 100, 16.0, 1.5, 0}), Error);
    CHECK_THROWS_AS(GridMeta::build({0, 4, 1 << 10, 16.0, 1.5, 0}), Error);
    CHECK_THROWS_AS(GridMeta::build({8, 0, 1 << 10, 16.0, 1.5, 0}), Error);
    CHECK_THROWS_AS(GridMeta::build({8, 4, 1 << 10, 0.5, 1.5, 0}), Error);
}

TEST_CASE("contraction identity inside unit ball") {
    Vec3 c = contract_raw(Vec3(0.5, 0, 0));
    CHECK(c.isApprox(Vec3(0.5, 0, 0), 1e-15));
}

TEST_CASE("contraction squashes far points") {
    Vec3 c = contract_raw(Vec3(4, 0, 0));
    CHECK(std::abs(c(0) - 1.75) < 1e-12);
    CHECK(std::abs(c(1)) < 1e-15);
    Vec3 d = contract_raw(Vec3(3, 4, 0)); // norm 5 -> 1.8 along (0.6, 0.8, 0)
    CHECK(std::abs(d(0) - 1.08) < 1e-12);
    CHECK(std::abs(d(1) - 1.44) < 1e-12);
    CHECK(contract_raw(Vec3(1e9, 0, 0)).norm() < 2.0);
    CHECK(contract_raw(Vec3(1e9, 0, 0)).norm() > 2.0 - 1e-8);
}

TEST_CASE("contraction continuous at the unit sphere") {
    Vec3 in = contract_raw(Vec3(1.0 - 1e-9, 0, 0));
    Vec3 out = contract_raw(Vec3(1.0 + 1e-9, 0, 0));
    CHECK((in - out).norm() < 1e-8);
    CHECK_THROWS_AS(contract_raw(Vec3(std::nan(""), 0, 0)), Error);
}

TEST_CASE("contract_point maps into the unit cube") {
    Vec3 u = contract_point(Vec3(1, 0, 0), 2.0); // v = (0.5,0,0)
    CHECK(u.isApprox(Vec3(0.625, 0.5, 0.5), 1e-15));
    for (double s : {0.1, 0.9, 3.0, 40.0}) {
        Vec3 w = contract_point(Vec3(s, -s, s), 1.0);
        for (int c = 0; c < 3; ++c) {
            CHECK(w(c) > 0.0);
            CHECK(w(c) < 1.0);
        }
    }
}

TEST_CASE("contract01 op agrees with the scalar helper") {
    Tensor x({4, 3}, {0.3, -0.2, 0.1, 3.0, 4.0, 0.0, -8.0, 1.0, 2.0, 0.0, 0.0, 0.0});
    Var u = ad::contract01(ad::make_const(x), 2.0);
    ad::forward_eval(u);
    for (int64_t i = 0; i < 4; ++i) {
        Vec3 ref = contract_point(Vec3(x.at(i, 0), x.at(i, 1), x.at(i, 2)), 2.0);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(u->value.at(i, c) - ref(c)) < 1e-12);
    }
}

TEST_CASE("contraction jacobian determinant") {
    CHECK(contraction_detj(0.3) == 1.0);
    CHECK(std::abs(contraction_detj(2.0) - 9.0 / 64.0) < 1e-15);
    CHECK(std::abs(contraction_detj(1.0 + 1e-12) - 1.0) < 1e-9);
}

TEST_CASE("frustum volume hand value") {
    double v = frustum_volume(1.0, 2.0, 0.01, 0.01);
    CHECK(std::abs(v - 7e-4 / 3.0) < 1e-12);
    CHECK(std::abs(frustum_volume(1.0, 2.0, 0.02, 0.02) - 4.0 * v) < 1e-12);
    CHECK_THROWS_AS(frustum_volume(2.0, 1.0, 0.01, 0.01), Error);
    CHECK_THROWS_AS(frustum_volume(1.0, 1.0, 0.01, 0.01), Error);
    CHECK_THROWS_AS(frustum_volume(-1.0, 1.0, 0.01, 0.01), Error);
    CHECK_THROWS_AS(frustum_volume(1.0, 2.0, 0.0, 0.01), Error);
}

TEST_CASE("downweight clamps and decays") {
    CHECK(downweight(2.0, 1.0) == 0.5);
    CHECK(downweight(5.0, 0.0) == 1.0);
    CHECK(downweight(0.5, 1.0) == 1.0);
    double prev = 1.0;
    for (double v : {0.1, 1.0, 10.0, 1e3}) {
        double w = downweight(3.0, v);
        CHECK(w <= prev);
        CHECK(w > 0.0);
        prev = w;
    }
}

TEST_CASE("cells per meter") {
    CHECK(std::abs(static_cells_per_meter(128, 1.0, 0.5) - 32.0) < 1e-12);
    double adj = std::cbrt(9.0 / 64.0);
    CHECK(std::abs(static_cells_per_meter(128, 1.0, 2.0) - 32.0 * adj) < 1e-12);
    CHECK(std::abs(actor_cells_per_meter(24, Vec3(4, 2, 1)) - 12.0) < 1e-12);
}

TEST_CASE("hash interp is exact at vertices") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 2, 1 << 10, 2.0, 1.5, 0}));
    REQUIRE(m->dense[0]);
    REQUIRE(m->total_rows == 27);
    Tensor tab = ramp_table(*m);
    Tensor p({3, 3}, {0, 0, 0, 1, 1, 1, 0.5, 0.5, 0.5});
    Var out = ad::hash_interp(ad::make_const(tab), ad::make_const(p), m, nullptr);
    ad::forward_eval(out);
    // dense row of vertex (vx,vy,vz) at res 2 is 9vx + 3vy + vz
    for (int64_t f = 0; f < 2; ++f) {
        CHECK(std::abs(out->value.at(0, f) - tab.at(0, f)) < 1e-15);
        CHECK(std::abs(out->value.at(1, f) - tab.at(26, f)) < 1e-15);
        CHECK(std::abs(out->value.at(2, f) - tab.at(13, f)) < 1e-15);
    }
}

TEST_CASE("hash interp at a cell center averages its corners") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 2, 1 << 10, 2.0, 1.5, 0}));
    Tensor tab = ramp_table(*m);
    Tensor p({1, 3}, {0.25, 0.25, 0.25});
    Var out = ad::hash_interp(ad::make_const(tab), ad::make_const(p), m, nullptr);
    ad::forward_eval(out);
    const int64_t corners[8] = {0, 1, 3, 4, 9, 10, 12, 13};
    for (int64_t f = 0; f < 2; ++f) {
        double mean = 0;
        for (int64_t r : corners) mean += tab.at(r, f) / 8.0;
        CHECK(std::abs(out->value.at(0, f) - mean) < 1e-14);
    }
}

TEST_CASE("hash interp table gradient equals trilinear weights") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 1, 1 << 10, 2.0, 1.5, 0}));
    Var tab = ad::make_param(Tensor({m->total_rows, 1}, 0.0));
    Tensor p({1, 3}, {0.35, 0.2, 0.4}); // cell (0,0,0), frac (0.7, 0.4, 0.8)
    Var loss = ad::sum(ad::hash_interp(tab, ad::make_const(p), m, nullptr));
    ad::forward_eval(loss);
    ad::backward(loss);
    const double fx = 0.7, fy = 0.4, fz = 0.8;
    for (int vx = 0; vx < 2; ++vx)
        for (int vy = 0; vy < 2; ++vy)
            for (int vz = 0; vz < 2; ++vz) {
                double w = (vx ? fx : 1 - fx) * (vy ? fy : 1 - fy) * (vz ? fz : 1 - fz);
                CHECK(std::abs(tab->grad.at(9 * vx + 3 * vy + vz, 0) - w) < 1e-12);
            }
    double total = 0;
    for (int64_t r = 0; r < m->total_rows; ++r) total += tab->grad.at(r, 0);
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("hash interp query gradient matches the ramp slope") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 1, 1 << 10, 2.0, 1.5, 0}));
    Tensor tab({27, 1});
    for (int64_t r = 0; r < 27; ++r) tab[r] = static_cast<double>(r);
    Var p = ad::make_param(Tensor({1, 3}, {0.35, 0.2, 0.4}));
    Var loss = ad::sum(ad::hash_interp(ad::make_const(tab), p, m, nullptr));
    ad::forward_eval(loss);
    ad::backward(loss);
    // table value 9vx + 3vy + vz is linear, so d/dp = res * (9, 3, 1)
    CHECK(std::abs(p->grad.at(0, 0) - 18.0) < 1e-12);
    CHECK(std::abs(p->grad.at(0, 1) - 6.0) < 1e-12);
    CHECK(std::abs(p->grad.at(0, 2) - 2.0) < 1e-12);
}

TEST_CASE("hash interp routes actors to disjoint rows") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 1, 1 << 10, 2.0, 1.5, 2}));
    REQUIRE(m->total_rows == 54);
    Tensor tab({54, 1});
    for (int64_t r = 0; r < 54; ++r) tab[r] = 0.01 * static_cast<double>(r);
    Tensor p({2, 3}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    auto actors = std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{0, 1});
    Var out = ad::hash_interp(ad::make_const(tab), ad::make_const(p), m, actors);
    ad::forward_eval(out);
    CHECK(std::abs(out->value.at(0, 0) - 0.13) < 1e-12);
    CHECK(std::abs(out->value.at(1, 0) - (0.13 + 0.27)) < 1e-12);
}

TEST_CASE("hashed levels stay in bounds and deterministic") {
    auto m = std::make_shared<GridMeta>(GridMeta::build({1, 2, 16, 8.0, 1.5, 0}));
    REQUIRE(!m->dense[0]);
    REQUIRE(m->total_rows == 16);
    Tensor tab({16, 2});
    for (int64_t i = 0; i < tab.numel(); ++i) tab[i] = 0.1 * static_cast<double>(i);
    Tensor p({5, 3});
    for (int64_t i = 0; i < p.numel(); ++i) p[i] = 0.05 + 0.9 * ((7 * i) % 13) / 13.0;
    Tensor first;
    for (int rep = 0; rep < 2; ++rep) {
        Var out = ad::hash_interp(ad::make_const(tab), ad::make_const(p), m, nullptr);
        ad::forward_eval(out);
        for (int64_t i = 0; i < out->value.numel(); ++i) CHECK(std::isfinite(out->value[i]));
        if (rep == 0)
            first = out->value;
        else
            CHECK(std::memcmp(first.data(), out->value.data(),
                              sizeof(double) * static_cast<size_t>(first.numel())) == 0);
    }
}

TEST_CASE("encode tags a scene without actors as static") {
    SceneDesc s;
    s.scene_radius = 5.0;
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({1, 2, 1 << 8, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    std::vector<Vec3> pts = {{0.3, -1.0, 0.7}, {9.0, 2.0, -4.0}};
    EncodeResult r = encode_simple(s, pts, {0.0, 1.0}, st, sm, at, am);
    CHECK(r.branch == std::vector<int>{-1, -1});
    CHECK(r.enc->value.size(0) == 2);
    CHECK(r.enc->value.size(1) == 4);

    // static samples ignore time entirely
    EncodeResult r2 = encode_simple(s, pts, {7.5, -3.0}, st, sm, at, am);
    for (int64_t i = 0; i < r.enc->value.numel(); ++i)
        CHECK(r.enc->value[i] == r2.enc->value[i]);
}

TEST_CASE("encode uses the actor grid at the actor center") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    EncodeResult r = encode_simple(s, {{5.0, 0.0, 0.0}}, {0.0}, st, sm, at, am);
    REQUIRE(r.branch == std::vector<int>{0});

    Tensor u({1, 3}, {0.5, 0.5, 0.5});
    auto a0 = std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{0});
    Var ref = ad::hash_interp(at, ad::make_const(u), am, a0);
    ad::forward_eval(ref);
    for (int64_t c = 0; c < 4; ++c)
        CHECK(std::abs(r.enc->value.at(0, c) - ref->value.at(0, c)) < 1e-12);
}

TEST_CASE("encode is invariant under the actor's rigid motion") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    Vec3 local(0.5, 0.3, -0.2);
    Vec3 w0 = s.actors[0].track.at(0.0).apply(local);
    Vec3 w1 = s.actors[0].track.at(1.0).apply(local);
    EncodeResult r0 = encode_simple(s, {w0}, {0.0}, st, sm, at, am);
    EncodeResult r1 = encode_simple(s, {w1}, {1.0}, st, sm, at, am);
    REQUIRE(r0.branch == std::vector<int>{0});
    REQUIRE(r1.branch == std::vector<int>{0});
    for (int64_t c = 0; c < 4; ++c)
        CHECK(std::abs(r0.enc->value.at(0, c) - r1.enc->value.at(0, c)) < 1e-9);
}

TEST_CASE("encode branch follows the moving actor") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    EncodeResult r = encode_simple(s, {{5.0, 0.0, 0.0}, {5.0, 0.0, 0.0}}, {0.0, 1.0}, st, sm, at,
                                   am);
    CHECK(r.branch == std::vector<int>{0, -1});
}

TEST_CASE("encode keeps mixed batches row aligned") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    std::vector<Vec3> pts = {{-2.0, 1.0, 0.5}, {5.2, 0.1, -0.3}, {8.0, -6.0, 2.0}};
    EncodeResult batch = encode_simple(s, pts, {0.0, 0.0, 0.0}, st, sm, at, am);
    CHECK(batch.branch == std::vector<int>{-1, 0, -1});
    for (size_t i = 0; i < pts.size(); ++i) {
        EncodeResult single = encode_simple(s, {pts[i]}, {0.0}, st, sm, at, am);
        for (int64_t c = 0; c < 4; ++c)
            CHECK(std::abs(batch.enc->value.at(static_cast<int64_t>(i), c) -
                           single.enc->value.at(0, c)) < 1e-12);
    }
}

TEST_CASE("encode mirrors symmetric actors across their y plane") {
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    std::vector<Vec3> pts = {{5.3, 0.4, -0.2}, {5.3, -0.4, -0.2}};

    SceneDesc sym = one_actor_scene(true);
    EncodeResult r = encode_simple(sym, pts, {0.0, 0.0}, st, sm, at, am);
    REQUIRE(r.branch == std::vector<int>{0, 0});
    for (int64_t c = 0; c < 4; ++c)
        CHECK(std::abs(r.enc->value.at(0, c) - r.enc->value.at(1, c)) < 1e-12);

    SceneDesc asym = one_actor_scene(false);
    EncodeResult q = encode_simple(asym, pts, {0.0, 0.0}, st, sm, at, am);
    double diff = 0;
    for (int64_t c = 0; c < 4; ++c) diff += std::abs(q.enc->value.at(0, c) - q.enc->value.at(1, c));
    CHECK(diff > 1e-6);
}

TEST_CASE("view directions rotate into actor frames") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    // at t=1 the actor sits at (5,5,0) with a 90 degree yaw
    std::vector<Vec3> pts = {{5.0, 5.0, 0.0}, {-3.0, 1.0, 0.5}};
    std::vector<double> times{1.0, 1.0}, vol{1e-6, 1e-6};
    Tensor d({2, 3}, {1, 0, 0, 0, 1, 0});
    EncodeInputs in{ad::make_const(pts_tensor(pts)), &times, &vol, ad::make_const(d)};
    EncodeResult r = actor_aware_encode(s, in, st, sm, at, am, nullptr, false);
    REQUIRE(r.dirs_local);
    ad::forward_eval(r.dirs_local);
    REQUIRE(r.branch[0] == 0);
    REQUIRE(r.branch[1] == -1);
    // actor row: R_z(90deg)^T maps x_hat to -y_hat
    CHECK(std::abs(r.dirs_local->value.at(0, 0)) < 1e-12);
    CHECK(r.dirs_local->value.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(r.dirs_local->value.at(0, 2)) < 1e-12);
    // static row passes through untouched
    CHECK(r.dirs_local->value.at(1, 0) == 0.0);
    CHECK(r.dirs_local->value.at(1, 1) == 1.0);
    CHECK(r.dirs_local->value.at(1, 2) == 0.0);
}

TEST_CASE("identity corrections match the uncorrected path") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    Tensor r6({2, 6}, {1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0});
    ActorCorrections corr{ad::make_param(r6), ad::make_param(Tensor({2, 3})), {0}};
    std::vector<Vec3> pts = {{5.4, 0.2, -0.3}, {-1.0, 2.0, 0.0}};
    EncodeResult a = encode_simple(s, pts, {0.3, 0.3}, st, sm, at, am, &corr);
    EncodeResult b = encode_simple(s, pts, {0.3, 0.3}, st, sm, at, am, nullptr);
    for (int64_t i = 0; i < a.enc->value.numel(); ++i)
        CHECK(std::abs(a.enc->value[i] - b.enc->value[i]) < 1e-12);
}

TEST_CASE("translation corrections shift the local frame") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    Vec3 delta(0.1, -0.05, 0.2);
    Tensor r6({2, 6}, {1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0});
    Tensor dt({2, 3});
    for (int64_t k = 0; k < 2; ++k)
        for (int64_t c = 0; c < 3; ++c) dt.at(k, c) = delta(c);
    ActorCorrections corr{ad::make_param(r6), ad::make_param(dt), {0}};
    Vec3 x(5.4, 0.2, -0.3);
    EncodeResult r = encode_simple(s, {x}, {0.0}, st, sm, at, am, &corr);
    REQUIRE(r.branch == std::vector<int>{0});

    // at t=0 the pose is identity, so u = (x - t_ann - delta) / ext + 0.5
    Vec3 local = x - Vec3(5, 0, 0) - delta;
    Tensor u({1, 3});
    for (int c = 0; c < 3; ++c) u.at(0, c) = local(c) / s.actors[0].extents(c) + 0.5;
    auto a0 = std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{0});
    Var ref = ad::hash_interp(at, ad::make_const(u), am, a0);
    ad::forward_eval(ref);
    for (int64_t c = 0; c < 4; ++c)
        CHECK(std::abs(r.enc->value.at(0, c) - ref->value.at(0, c)) < 1e-12);

    // and gradients reach the correction parameters
    Var loss = ad::sum(r.enc);
    ad::forward_eval(loss);
    ad::backward(loss);
    double gnorm = 0;
    for (int64_t i = 0; i < corr.trans->grad.numel(); ++i)
        gnorm += std::abs(corr.trans->grad[i]);
    CHECK(gnorm > 1e-8);
}

TEST_CASE("downweighting scales encodings by per-level weights") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    std::vector<Vec3> pts = {{-2.0, 1.0, 0.5}, {5.2, 0.1, -0.3}};
    std::vector<double> times = {0.0, 0.0};
    std::vector<double> vol(2, 500.0);
    EncodeInputs in{ad::make_const(pts_tensor(pts)), &times, &vol, {}};
    EncodeResult plain = actor_aware_encode(s, in, st, sm, at, am, nullptr, false);
    EncodeResult dw = actor_aware_encode(s, in, st, sm, at, am, nullptr, true);
    ad::forward_eval(plain.enc);
    ad::forward_eval(dw.enc);

    std::vector<double> ws = static_level_weights(*sm, s.scene_radius, pts[0], 500.0);
    std::vector<double> wa = actor_level_weights(*am, s.actors[0].extents, 500.0);
    for (size_t l = 0; l < 2; ++l) {
        CHECK(ws[l] <= 1.0);
        CHECK(wa[l] <= 1.0);
        if (l) {
            CHECK(ws[l] <= ws[l - 1]);
            CHECK(wa[l] <= wa[l - 1]);
        }
        for (int64_t f = 0; f < 2; ++f) {
            int64_t c = static_cast<int64_t>(l) * 2 + f;
            CHECK(std::abs(dw.enc->value.at(0, c) - ws[l] * plain.enc->value.at(0, c)) < 1e-12);
            CHECK(std::abs(dw.enc->value.at(1, c) - wa[l] * plain.enc->value.at(1, c)) < 1e-12);
        }
    }
    // a negligible footprint leaves every level untouched
    for (double w : static_level_weights(*sm, s.scene_radius, pts[0], 1e-12)) CHECK(w == 1.0);
}

TEST_CASE("encode validates batch shapes") {
    SceneDesc s = one_actor_scene(false);
    auto sm = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 0}));
    auto am = std::make_shared<GridMeta>(GridMeta::build({2, 2, 1 << 10, 4.0, 2.0, 1}));
    Var st = ad::make_const(ramp_table(*sm));
    Var at = ad::make_const(ramp_table(*am));
    std::vector<double> times = {0.0};
    std::vector<double> vol = {1e-6, 1e-6};
    EncodeInputs in{ad::make_const(Tensor({2, 3})), &times, &vol, {}};
    CHECK_THROWS_AS(actor_aware_encode(s, in, st, sm, at, am, nullptr, false), Error);
}
