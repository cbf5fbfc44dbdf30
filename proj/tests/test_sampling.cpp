// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nff/rng.hpp"
#include "nff/sampling.hpp"

using namespace nff;
using ad::Var;

namespace {

Tensor row_tensor(const std::vector<double>& v) {
    Tensor t({1, static_cast<int64_t>(v.size())});
    for (size_t i = 0; i < v.size(); ++i) t.at(0, static_cast<int64_t>(i)) = v[i];
    return t;
}

// exact compositing weights for a piecewise-constant wall density: the
// optical depth of an interval is sigma times its overlap with the wall
std::vector<double> wall_weights(const std::vector<double>& edges, double center, double half,
                                 double sigma) {
    size_t n = edges.size() - 1;
    std::vector<double> w(n);
    double trans = 1.0;
    for (size_t i = 0; i < n; ++i) {
        double lo = std::max(edges[i], center - half);
        double hi = std::min(edges[i + 1], center + half);
        double alpha = 1.0 - std::exp(-sigma * std::max(0.0, hi - lo));
        w[i] = trans * alpha;
        trans *= 1.0 - alpha;
    }
    return w;
}

SceneDesc one_actor_scene() {
    SceneDesc s;
    s.name = "unit";
    s.scene_radius = 10.0;
    ActorTrajectory a;
    a.extents = Vec3(4, 2, 2);
    a.symmetric = false;
    a.track.add(0.0, Pose{Quat::Identity(), Vec3(5, 0, 0)});
    a.track.add(1.0, Pose{Quat::Identity(), Vec3(5, 5, 0)});
    s.actors.push_back(a);
    return s;
}

} // namespace

TEST_CASE("power map values and round trip") {
    CHECK(power_map(0.0) == 0.0);
    CHECK(power_map(5.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(power_unmap(0.4) == doctest::Approx(5.0).epsilon(1e-15));
    for (double x : {0.01, 0.1, 1.0, 17.3, 240.0, 9e4}) {
        CHECK(power_unmap(power_map(x)) == doctest::Approx(x).epsilon(1e-12));
    }
    double prev = -1.0;
    for (double x = 0.0; x <= 2000.0; x += 2.5) {
        double y = power_map(x);
        CHECK(y > prev);
        CHECK(y < 2.0);
        prev = y;
    }
    CHECK_THROWS_AS(power_map(-1.0), Error);
    CHECK_THROWS_AS(power_unmap(2.0), Error);
}

TEST_CASE("power spacing endpoints and growing intervals") {
    int n = 32;
    std::vector<double> u(n + 1);
    for (int i = 0; i <= n; ++i) u[static_cast<size_t>(i)] = double(i) / n;
    std::vector<double> tau = power_spacing(u, 0.5, 80.0);
    CHECK(tau.front() == 0.5);
    CHECK(tau.back() == 80.0);
    double prev_gap = 0.0;
    for (int i = 0; i < n; ++i) {
        double gap = tau[static_cast<size_t>(i) + 1] - tau[static_cast<size_t>(i)];
        CHECK(gap > 0.0);
        CHECK(gap >= prev_gap - 1e-12);
        prev_gap = gap;
    }
    CHECK_THROWS_AS(power_spacing(u, 5.0, 5.0), Error);
    CHECK_THROWS_AS(power_spacing({-0.1}, 0.5, 80.0), Error);
}

TEST_CASE("power spacing puts most samples close") {
    std::vector<double> u(128);
    for (int i = 0; i < 128; ++i) u[static_cast<size_t>(i)] = double(i) / 127.0;
    std::vector<double> tau = power_spacing(u, 0.1, 1000.0);
    int below = 0;
    for (double t : tau)
        if (t < 100.0) ++below;
    CHECK(below > 64);
}

TEST_CASE("initial edges pinned jittered deterministic") {
    std::vector<double> near{0.1, 1.0, 2.0}, far{50.0, 100.0, 30.0};
    std::vector<int64_t> uids{11, 12, 13};
    RaySamples a = initial_edges(near, far, 16, 77, uids, true);
    RaySamples b = initial_edges(near, far, 16, 77, uids, true);
    REQUIRE(a.edges.size(0) == 3);
    REQUIRE(a.edges.size(1) == 17);
    for (int64_t r = 0; r < 3; ++r) {
        CHECK(a.edges.at(r, 0) == near[static_cast<size_t>(r)]);
        CHECK(a.edges.at(r, 16) == far[static_cast<size_t>(r)]);
        for (int64_t j = 1; j <= 16; ++j) CHECK(a.edges.at(r, j) > a.edges.at(r, j - 1));
        for (int64_t j = 0; j <= 16; ++j) CHECK(a.edges.at(r, j) == b.edges.at(r, j));
    }

    // unjittered edges reproduce the plain power spacing
    RaySamples c = initial_edges(near, far, 16, 77, uids, false);
    std::vector<double> u(17);
    for (int j = 0; j <= 16; ++j) u[static_cast<size_t>(j)] = double(j) / 16.0;
    std::vector<double> tau = power_spacing(u, near[0], far[0]);
    for (int64_t j = 0; j <= 16; ++j)
        CHECK(c.edges.at(0, j) == doctest::Approx(tau[static_cast<size_t>(j)]).epsilon(1e-15));

    // same near/far but different uid changes the jitter
    std::vector<int64_t> uids2{21, 12, 13};
    RaySamples d = initial_edges(near, far, 16, 77, uids2, true);
    bool differs = false;
    for (int64_t j = 1; j < 16; ++j)
        if (d.edges.at(0, j) != a.edges.at(0, j)) differs = true;
    CHECK(differs);
}

TEST_CASE("resample concentrates in a single hot bin") {
    std::vector<double> w{0.0, 0.0, 1.0, 0.0};
    std::vector<double> e{0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> out = proposal_resample(w, e, 8, 3, 9, 0);
    REQUIRE(out.size() == 9);
    for (double t : out) {
        CHECK(t >= 2.0);
        CHECK(t <= 3.0);
    }
}

TEST_CASE("resample uniform weights follows strata exactly") {
    std::vector<double> e{0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> uni = proposal_resample({1.0, 1.0, 1.0, 1.0}, e, 10, 5, 9, 100);
    for (int j = 0; j <= 10; ++j) {
        double eta = rng::uniform(5, 9, 100 + static_cast<uint64_t>(j));
        double expect = 4.0 * (j + eta) / 11.0;
        CHECK(uni[static_cast<size_t>(j)] == doctest::Approx(expect).epsilon(1e-12));
    }
    // all-zero weights fall back to the same uniform distribution
    std::vector<double> zero = proposal_resample({0.0, 0.0, 0.0, 0.0}, e, 10, 5, 9, 100);
    for (size_t j = 0; j < uni.size(); ++j)
        CHECK(zero[j] == doctest::Approx(uni[j]).epsilon(1e-12));
}

TEST_CASE("resample splits two bins three to one") {
    std::vector<double> w{3.0, 1.0};
    std::vector<double> e{0.0, 1.0, 2.0};
    std::vector<double> out = proposal_resample(w, e, 15, 12, 9, 0);
    REQUIRE(out.size() == 16);
    int low = 0;
    for (double t : out)
        if (t < 1.0) ++low;
    CHECK(low == 12); // strata make the 3:1 split exact
}

TEST_CASE("resample stays sorted and in range under random weights") {
    for (int trial = 0; trial < 50; ++trial) {
        uint64_t s = 1000 + static_cast<uint64_t>(trial);
        int n = 3 + static_cast<int>(rng::index(s, 1, 0, 14));
        std::vector<double> w(static_cast<size_t>(n)), e(static_cast<size_t>(n) + 1);
        e[0] = 0.3;
        for (int i = 0; i < n; ++i) {
            double r = rng::uniform(s, 2, static_cast<uint64_t>(i));
            w[static_cast<size_t>(i)] = r < 0.35 ? 0.0 : r;
            e[static_cast<size_t>(i) + 1] =
                e[static_cast<size_t>(i)] + 0.1 + 3.0 * rng::uniform(s, 3, static_cast<uint64_t>(i));
        }
        std::vector<double> out = proposal_resample(w, e, 12, 7, 9, 50 * s);
        REQUIRE(out.size() == 13);
        for (size_t j = 0; j < out.size(); ++j) {
            CHECK(out[j] >= e.front());
            CHECK(out[j] <= e.back());
            if (j) CHECK(out[j] > out[j - 1]);
        }
        std::vector<double> again = proposal_resample(w, e, 12, 7, 9, 50 * s);
        for (size_t j = 0; j < out.size(); ++j) CHECK(out[j] == again[j]);
    }
}

TEST_CASE("resample batch keyed by ray uid") {
    Tensor w({2, 3});
    Tensor e({2, 4});
    double wa[3] = {0.2, 0.5, 0.3}, wb[3] = {1.0, 0.0, 2.0};
    for (int i = 0; i < 3; ++i) {
        w.at(0, i) = wa[i];
        w.at(1, i) = wb[i];
        e.at(0, i) = double(i);
        e.at(1, i) = 2.0 * i;
    }
    e.at(0, 3) = 3.0;
    e.at(1, 3) = 6.0;
    RaySamples s1 = resample_batch(w, e, 6, 99, 1, {7, 9});
    REQUIRE(s1.edges.size(0) == 2);
    REQUIRE(s1.edges.size(1) == 7);
    for (int64_t r = 0; r < 2; ++r)
        for (int64_t j = 1; j <= 6; ++j) CHECK(s1.edges.at(r, j) > s1.edges.at(r, j - 1));

    // swapping the rows and uids together swaps the output rows exactly
    Tensor w2({2, 3}), e2({2, 4});
    for (int i = 0; i < 4; ++i) {
        if (i < 3) {
            w2.at(0, i) = wb[i];
            w2.at(1, i) = wa[i];
        }
        e2.at(0, i) = e.at(1, i);
        e2.at(1, i) = e.at(0, i);
    }
    RaySamples s2 = resample_batch(w2, e2, 6, 99, 1, {9, 7});
    for (int64_t j = 0; j <= 6; ++j) {
        CHECK(s2.edges.at(0, j) == s1.edges.at(1, j));
        CHECK(s2.edges.at(1, j) == s1.edges.at(0, j));
    }

    // a later round draws different jitter
    RaySamples s3 = resample_batch(w, e, 6, 99, 2, {7, 9});
    bool differs = false;
    for (int64_t j = 0; j <= 6; ++j)
        if (s3.edges.at(0, j) != s1.edges.at(0, j)) differs = true;
    CHECK(differs);
}

TEST_CASE("interlevel bound hand values") {
    Tensor fe = row_tensor({0.0, 1.0, 2.0});
    Tensor fw = row_tensor({0.6, 0.4});

    Tensor pe = row_tensor({0.0, 0.5, 2.0});
    Tensor plain = interlevel_bound(pe, fw, fe, false);
    CHECK(plain.at(0, 0) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(plain.at(0, 1) == doctest::Approx(0.7).epsilon(1e-14));

    // blur triples each final interval: [0,1] -> [-1,2] at density 0.2,
    // [1,2] -> [0,3] at density 2/15
    Tensor blurred = interlevel_bound(pe, fw, fe, true);
    CHECK(blurred.at(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    CHECK(blurred.at(0, 1) == doctest::Approx(0.5).epsilon(1e-13));

    // one proposal interval covering everything collects the full mass
    Tensor cover = interlevel_bound(row_tensor({0.0, 2.0}), fw, fe, false);
    CHECK(cover.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("interlevel loss zero when proposal bounds final") {
    Tensor fe = row_tensor({0.0, 1.0, 2.0, 3.0, 4.0});
    Tensor fw = row_tensor({0.1, 0.7, 0.15, 0.05});

    // identical histograms, no blur: bound equals weight everywhere
    Var pw = ad::make_param(fw);
    Var loss = interlevel_loss(pw, fe, fw, fe, false);
    ad::forward_eval(loss);
    CHECK(loss->value.at(0) == 0.0);

    // generous uniform proposal upper-bounds even the blurred mass
    Var generous = ad::make_param(row_tensor({1.0, 1.0, 1.0, 1.0}));
    Var loss2 = interlevel_loss(generous, fe, fw, fe, true);
    ad::forward_eval(loss2);
    CHECK(loss2->value.at(0) == 0.0);

    // blur leaks a peaked histogram into the neighbours, so the identical
    // proposal no longer upper-bounds it
    Tensor peak = row_tensor({0.0, 1.0, 0.0, 0.0});
    Var pw3 = ad::make_param(peak);
    Var loss3 = interlevel_loss(pw3, fe, peak, fe, true);
    ad::forward_eval(loss3);
    CHECK(loss3->value.at(0) > 0.0);
}

TEST_CASE("interlevel loss penalizes missing proposal mass") {
    Tensor fe = row_tensor({0.0, 1.0, 2.0});
    Tensor fw = row_tensor({0.0, 0.9});
    Var pw = ad::make_param(row_tensor({0.9, 0.0}));
    Var loss = interlevel_loss(pw, fe, fw, fe, false);
    ad::forward_eval(loss);
    CHECK(loss->value.at(0) > 0.1);
    ad::backward(loss);
    // more proposal mass where the final mass sits would reduce the loss
    CHECK(pw->grad.at(0, 1) < 0.0);
    CHECK(pw->grad.at(0, 0) == 0.0);
}

TEST_CASE("interlevel loss never increases when final shrinks") {
    for (int trial = 0; trial < 30; ++trial) {
        uint64_t s = 40 + static_cast<uint64_t>(trial);
        int np = 4 + static_cast<int>(rng::index(s, 1, 0, 5));
        int nf = 4 + static_cast<int>(rng::index(s, 1, 1, 9));
        auto edges = [&](int n, uint64_t stream) {
            Tensor t({1, n + 1});
            double x = 0.0;
            for (int i = 0; i <= n; ++i) {
                t.at(0, i) = x;
                x += 0.05 + rng::uniform(s, stream, static_cast<uint64_t>(i));
            }
            return t;
        };
        Tensor pe = edges(np, 2), fe = edges(nf, 3);
        Tensor pw({1, np}), fw({1, nf}), fw_half({1, nf});
        for (int i = 0; i < np; ++i) pw.at(0, i) = 0.3 * rng::uniform(s, 4, static_cast<uint64_t>(i));
        for (int i = 0; i < nf; ++i) {
            fw.at(0, i) = rng::uniform(s, 5, static_cast<uint64_t>(i));
            fw_half.at(0, i) = 0.5 * fw.at(0, i);
        }
        for (bool blur : {false, true}) {
            Var a = ad::make_param(pw);
            Var la = interlevel_loss(a, pe, fw, fe, blur);
            Var b = ad::make_param(pw);
            Var lb = interlevel_loss(b, pe, fw_half, fe, blur);
            ad::forward_eval(la);
            ad::forward_eval(lb);
            CHECK(lb->value.at(0) <= la->value.at(0) + 1e-15);
        }
    }
}

TEST_CASE("alpha from density closed form and gradient") {
    Tensor dtau({1, 3});
    dtau.at(0, 0) = 2.0;
    dtau.at(0, 1) = 0.5;
    dtau.at(0, 2) = 1.0;
    Tensor sig({1, 3});
    sig.at(0, 0) = 3.0;
    sig.at(0, 1) = 0.0;
    sig.at(0, 2) = 0.7;
    Var s = ad::make_param(sig);
    Var alpha = alpha_from_density(s, dtau);
    Var total = ad::sum(alpha);
    ad::forward_eval(total);
    CHECK(alpha->value.at(0, 0) == doctest::Approx(1.0 - std::exp(-6.0)).epsilon(1e-15));
    CHECK(alpha->value.at(0, 1) == 0.0);
    CHECK(alpha->value.at(0, 2) == doctest::Approx(1.0 - std::exp(-0.7)).epsilon(1e-15));
    ad::backward(total);
    for (int i = 0; i < 3; ++i) {
        double d = dtau.at(0, i), v = sig.at(0, i);
        CHECK(s->grad.at(0, i) == doctest::Approx(d * std::exp(-v * d)).epsilon(1e-12));
    }
}

TEST_CASE("proposal weights composite and saturate") {
    Tensor edges({1, 5});
    for (int i = 0; i <= 4; ++i) edges.at(0, i) = 1.0 + i;
    Tensor sig({1, 4});
    sig.at(0, 0) = 80.0; // opaque first interval
    for (int i = 1; i < 4; ++i) sig.at(0, i) = 0.3;
    Var s = ad::make_param(sig);
    Var w = proposal_weights(s, edges);
    ad::forward_eval(w);
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        CHECK(w->value.at(0, i) >= 0.0);
        total += w->value.at(0, i);
    }
    CHECK(total <= 1.0 + 1e-12);
    CHECK(w->value.at(0, 0) > 0.999999);
    CHECK(w->value.at(0, 1) < 1e-6);
}

TEST_CASE("proposal field density nonnegative with gradient flow") {
    SceneDesc scene = one_actor_scene();
    HashGridConfig cfg{5, 1, 1 << 12, 16.0, 1.7, 0};
    ProposalField f = ProposalField::create(1, cfg, cfg, 123);
    REQUIRE(f.smeta->cfg.feat == 1);
    REQUIRE(f.ameta->cfg.n_actors == 1);

    Tensor x({3, 3});
    // one point inside the actor at t=0, two static
    double pts[3][3] = {{5.0, 0.3, -0.2}, {-4.0, 2.0, 1.0}, {40.0, -9.0, 3.0}};
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) x.at(i, c) = pts[i][c];
    std::vector<double> times{0.0, 0.0, 0.0};
    std::vector<double> vol{1e-5, 1e-5, 1e-4};
    EncodeInputs in{ad::make_const(x), &times, &vol, {}};
    Var sigma = f.density(scene, in, nullptr, true);
    Var total = ad::sum(sigma);
    ad::forward_eval(total);
    REQUIRE(sigma->value.rank() == 2);
    REQUIRE(sigma->value.size(0) == 3);
    REQUIRE(sigma->value.size(1) == 1);
    for (int i = 0; i < 3; ++i) CHECK(sigma->value.at(i, 0) > 0.0); // softplus output
    ad::backward(total);
    double gs = 0.0, ga = 0.0, gw = 0.0;
    for (int64_t i = 0; i < f.static_table->grad.numel(); ++i)
        gs += std::abs(f.static_table->grad.at(i));
    for (int64_t i = 0; i < f.actor_table->grad.numel(); ++i)
        ga += std::abs(f.actor_table->grad.at(i));
    for (int64_t i = 0; i < f.lin_w->grad.numel(); ++i) gw += std::abs(f.lin_w->grad.at(i));
    CHECK(gs > 0.0);
    CHECK(ga > 0.0);
    CHECK(gw > 0.0);
    CHECK(f.params().size() == 4);

    HashGridConfig bad{5, 2, 1 << 12, 16.0, 1.7, 0};
    CHECK_THROWS_AS(ProposalField::create(1, bad, bad, 1), Error);
}

TEST_CASE("two resampling rounds concentrate on a wall") {
    // opaque wall at 30 m; resampling should pull nearly all final samples
    // into a +-1 m band without any learned proposals
    int R = 64;
    std::vector<double> near(static_cast<size_t>(R), 0.1);
    std::vector<double> far(static_cast<size_t>(R), 100.0);
    std::vector<int64_t> uids(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) uids[static_cast<size_t>(r)] = 1000 + r;

    RaySamples s0 = initial_edges(near, far, 48, 7, uids, true);
    auto weights_of = [&](const RaySamples& s) {
        int64_t n = s.edges.size(1) - 1;
        Tensor w({static_cast<int64_t>(R), n});
        for (int64_t r = 0; r < R; ++r) {
            std::vector<double> e(static_cast<size_t>(n) + 1);
            for (int64_t j = 0; j <= n; ++j) e[static_cast<size_t>(j)] = s.edges.at(r, j);
            std::vector<double> wr = wall_weights(e, 30.0, 0.5, 50.0);
            for (int64_t j = 0; j < n; ++j) w.at(r, j) = wr[static_cast<size_t>(j)];
        }
        return w;
    };
    RaySamples s1 = resample_batch(weights_of(s0), s0.edges, 24, 7, 1, uids);
    RaySamples s2 = resample_batch(weights_of(s1), s1.edges, 24, 7, 2, uids);

    int inside = 0, totaln = 0;
    Tensor mid = edge_midpoints(s2.edges);
    for (int64_t r = 0; r < R; ++r)
        for (int64_t j = 0; j < 24; ++j) {
            ++totaln;
            if (std::abs(mid.at(r, j) - 30.0) <= 1.0) ++inside;
        }
    CHECK(totaln == R * 24);
    CHECK(double(inside) / totaln >= 0.9);
}

TEST_CASE("edge widths and midpoints") {
    Tensor e = row_tensor({1.0, 2.0, 4.0, 8.0});
    Tensor w = edge_widths(e), m = edge_midpoints(e);
    CHECK(w.at(0, 0) == 1.0);
    CHECK(w.at(0, 1) == 2.0);
    CHECK(w.at(0, 2) == 4.0);
    CHECK(m.at(0, 0) == 1.5);
    CHECK(m.at(0, 1) == 3.0);
    CHECK(m.at(0, 2) == 6.0);
}

TEST_CASE("sampling validation errors") {
    CHECK_THROWS_AS(proposal_resample({1.0}, {0.0, 1.0}, 0, 1, 1, 0), Error);
    CHECK_THROWS_AS(proposal_resample({1.0, 1.0}, {0.0, 1.0}, 4, 1, 1, 0), Error);
    CHECK_THROWS_AS(proposal_resample({1.0, -0.5}, {0.0, 1.0, 2.0}, 4, 1, 1, 0), Error);
    CHECK_THROWS_AS(proposal_resample({1.0, 1.0}, {0.0, 1.0, 0.5}, 4, 1, 1, 0), Error);
    Tensor pe = row_tensor({0.0, 1.0});
    Tensor fw = row_tensor({1.0});
    CHECK_THROWS_AS(interlevel_bound(pe, fw, row_tensor({0.0, 1.0, 2.0}), false), Error);
    CHECK_THROWS_AS(initial_edges({1.0}, {2.0}, 8, 1, {1, 2}, true), Error);
}
