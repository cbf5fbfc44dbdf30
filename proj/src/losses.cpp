// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#include "nff/losses.hpp"

#include <cmath>
#include <limits>

#include "nff/common.hpp"
#include "nff/ops.hpp"

namespace nff {

namespace {

constexpr double kBceEps = 1e-12;

ad::Var abs_of(ad::Var d) {
    return ad::add(ad::relu(d), ad::relu(ad::neg(d)));
}

// Finite differences at stride k along the width axis of a (P,H,W,C) stack
// viewed as (P*H, W*C) rows.
ad::Var diff_x(const ad::Var& x, const Shape& s, int64_t k) {
    ad::Var r = ad::reshape(x, {s[0] * s[1], s[2] * s[3]});
    ad::Var hi = ad::slice_cols(r, k * s[3], s[2] * s[3]);
    ad::Var lo = ad::slice_cols(r, 0, (s[2] - k) * s[3]);
    return ad::sub(hi, lo);
}

// Finite differences at stride k along the height axis via row gathers.
ad::Var diff_y(const ad::Var& x, const Shape& s, int64_t k) {
    ad::Var r = ad::reshape(x, {s[0] * s[1], s[2] * s[3]});
    auto hi = std::make_shared<std::vector<int64_t>>();
    auto lo = std::make_shared<std::vector<int64_t>>();
    hi->reserve(s[0] * (s[1] - k));
    lo->reserve(s[0] * (s[1] - k));
    for (int64_t p = 0; p < s[0]; ++p)
        for (int64_t y = 0; y + k < s[1]; ++y) {
            hi->push_back(p * s[1] + y + k);
            lo->push_back(p * s[1] + y);
        }
    return ad::sub(ad::gather_rows(r, hi), ad::gather_rows(r, lo));
}

} // namespace

void LossWeights::validate() const {
    const double all[] = {rgb,  vgg,  intensity,   depth,       weight,
                          drop, prop_depth, prop_weight, interlevel};
    for (double v : all)
        NFF_CHECK(v >= 0.0, ErrKind::config, "loss weights must be nonnegative, got ", v);
    NFF_CHECK(eps > 0.0, ErrKind::config, "weight decay eps must be positive, got ", eps);
}

ad::Var multiscale_gradient_l1(ad::Var pred, const Tensor& truth) {
    NFF_CHECK(pred && pred->value.rank() == 4, ErrKind::config,
              "multiscale_gradient_l1 expects (P,H,W,C) patches");
    NFF_CHECK(pred->value.same_shape(truth), ErrKind::config,
              "prediction and truth patch shapes differ");
    const Shape s = pred->value.shape();
    ad::Var t = ad::make_const(truth);

    std::vector<ad::Var> terms;
    for (int64_t k : {1, 2, 4}) {
        if (s[2] > k)
            terms.push_back(ad::mean(abs_of(ad::sub(diff_x(pred, s, k), diff_x(t, s, k)))));
        if (s[1] > k)
            terms.push_back(ad::mean(abs_of(ad::sub(diff_y(pred, s, k), diff_y(t, s, k)))));
    }
    if (terms.empty()) return ad::make_const(Tensor({1}, 0.0));
    ad::Var acc = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) acc = ad::add(acc, terms[i]);
    return ad::scale(acc, 1.0 / static_cast<double>(terms.size()));
}

ImageLossTerms image_loss(ad::Var pred, const Tensor& truth, const LossWeights& w,
                          const Perceptual& perceptual) {
    NFF_CHECK(pred && pred->value.rank() == 4 && pred->value.size(3) == 3, ErrKind::config,
              "image_loss expects (P,H,W,3) patches");
    NFF_CHECK(pred->value.same_shape(truth), ErrKind::config,
              "prediction and truth patch shapes differ");
    ad::Var err = ad::sub(pred, ad::make_const(truth));
    ImageLossTerms out;
    out.rgb = ad::mean(ad::mul(err, err));
    out.perceptual = perceptual ? perceptual(pred, truth) : multiscale_gradient_l1(pred, truth);
    NFF_CHECK(out.perceptual && out.perceptual->value.numel() == 1, ErrKind::config,
              "perceptual extractor must return a scalar");
    out.total = ad::add(ad::scale(out.rgb, w.rgb), ad::scale(out.perceptual, w.vgg));
    return out;
}

void LidarTruth::validate(int64_t rays) const {
    const size_t r = static_cast<size_t>(rays);
    NFF_CHECK(depth.size() == r && intensity.size() == r && dropped.size() == r &&
                  max_range.size() == r,
              ErrKind::data, "lidar truth arrays must all have ", rays, " entries");
    for (size_t i = 0; i < r; ++i) {
        NFF_CHECK(max_range[i] > 0.0, ErrKind::data, "ray ", i, ": sensor range must be positive");
        if (dropped[i]) continue;
        NFF_CHECK(std::isfinite(depth[i]) && depth[i] > 0.0, ErrKind::data, "ray ", i,
                  ": returned ray needs a positive hit distance");
        NFF_CHECK(intensity[i] >= 0.0 && intensity[i] <= 1.0, ErrKind::data, "ray ", i,
                  ": intensity outside [0,1]");
    }
}

LidarLossTerms lidar_loss(ad::Var depth_pred, ad::Var int_pred, ad::Var pd_pred, ad::Var w,
                          const Tensor& midpoints, const LidarTruth& truth,
                          const LossWeights& lw) {
    NFF_CHECK(depth_pred && depth_pred->value.rank() == 2 && depth_pred->value.size(1) == 1,
              ErrKind::config, "depth predictions must be (R,1)");
    const int64_t rays = depth_pred->value.size(0);
    NFF_CHECK(int_pred && int_pred->value.same_shape(depth_pred->value), ErrKind::config,
              "intensity predictions must be (R,1)");
    NFF_CHECK(pd_pred && pd_pred->value.same_shape(depth_pred->value), ErrKind::config,
              "drop probabilities must be (R,1)");
    NFF_CHECK(w && w->value.rank() == 2 && w->value.size(0) == rays, ErrKind::config,
              "sample weights must be (R,S)");
    NFF_CHECK(w->value.same_shape(midpoints), ErrKind::config,
              "sample weights and midpoints must match");
    truth.validate(rays);
    for (int64_t r = 0; r < rays; ++r) {
        const double p = pd_pred->value.at(r, 0);
        NFF_CHECK(p > 0.0 && p < 1.0, ErrKind::data, "ray ", r,
                  ": drop probability must lie strictly inside (0,1), got ", p);
    }

    Tensor ret_mask({rays, 1});
    Tensor drop_mask({rays, 1});
    Tensor gt_depth({rays, 1});
    Tensor gt_int({rays, 1});
    Tensor ranges({rays, 1});
    Tensor y({rays, 1});
    Tensor not_y({rays, 1});
    for (int64_t r = 0; r < rays; ++r) {
        const bool d = truth.dropped[r] != 0;
        ret_mask.at(r, 0) = d ? 0.0 : 1.0;
        drop_mask.at(r, 0) = d ? 1.0 : 0.0;
        gt_depth.at(r, 0) = d ? 0.0 : truth.depth[r];
        gt_int.at(r, 0) = d ? 0.0 : truth.intensity[r];
        ranges.at(r, 0) = truth.max_range[r];
        y.at(r, 0) = d ? 1.0 : 0.0;
        not_y.at(r, 0) = d ? 0.0 : 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(rays);

    ad::Var e_ret = ad::mul_const(ad::sub(depth_pred, ad::make_const(gt_depth)), ret_mask);
    ad::Var e_drop =
        ad::mul_const(ad::relu(ad::sub(ad::make_const(ranges), depth_pred)), drop_mask);
    LidarLossTerms out;
    out.depth = ad::scale(
        ad::sum(ad::add(ad::mul(e_ret, e_ret), ad::mul(e_drop, e_drop))), inv_n);

    ad::Var e_int = ad::mul_const(ad::sub(int_pred, ad::make_const(gt_int)), ret_mask);
    out.intensity = ad::scale(ad::sum(ad::mul(e_int, e_int)), inv_n);

    ad::Var log_p = ad::log_eps(pd_pred, kBceEps);
    ad::Var log_q = ad::log_eps(ad::shift(ad::neg(pd_pred), 1.0), kBceEps);
    ad::Var bce = ad::neg(ad::add(ad::mul_const(log_p, y), ad::mul_const(log_q, not_y)));
    out.drop = ad::scale(ad::sum(bce), inv_n);

    out.weight_decay =
        ad::scale(weight_decay_loss(w, lidar_gamma(midpoints, truth), lw.eps), inv_n);

    out.total = ad::add(ad::add(ad::scale(out.depth, lw.depth), ad::scale(out.intensity, lw.intensity)),
                        ad::add(ad::scale(out.drop, lw.drop), ad::scale(out.weight_decay, lw.weight)));
    return out;
}

ad::Var weight_decay_loss(ad::Var w, const Tensor& gamma, double eps) {
    NFF_CHECK(eps > 0.0, ErrKind::config, "weight decay eps must be positive, got ", eps);
    NFF_CHECK(w && w->value.same_shape(gamma), ErrKind::config,
              "sample weights and distances must match");
    Tensor mask(gamma.shape());
    for (int64_t i = 0; i < gamma.numel(); ++i)
        mask.data()[i] = gamma.data()[i] > eps ? 1.0 : 0.0;
    ad::Var m = ad::mul_const(w, mask);
    return ad::sum(ad::mul(m, m));
}

Tensor lidar_gamma(const Tensor& midpoints, const LidarTruth& truth) {
    NFF_CHECK(midpoints.rank() == 2, ErrKind::config, "midpoints must be (R,S)");
    const int64_t rays = midpoints.size(0);
    const int64_t samples = midpoints.size(1);
    truth.validate(rays);
    const double inf = std::numeric_limits<double>::infinity();
    Tensor gamma(midpoints.shape());
    for (int64_t r = 0; r < rays; ++r)
        for (int64_t s = 0; s < samples; ++s) {
            const double m = midpoints.at(r, s);
            if (truth.dropped[r])
                gamma.at(r, s) = m < truth.max_range[r] ? inf : 0.0;
            else
                gamma.at(r, s) = std::abs(m - truth.depth[r]);
        }
    return gamma;
}

} // namespace nff
