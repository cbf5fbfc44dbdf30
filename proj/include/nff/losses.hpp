// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "nff/autodiff.hpp"
#include "nff/tensor.hpp"

namespace nff {

// Scalar weights for every training objective term, plus the weight-decay
// exclusion band around lidar hits (meters).
struct LossWeights {
    double rgb = 5.0;
    double vgg = 5e-2;
    double intensity = 1e-1;
    double depth = 1e-2;
    double weight = 1e-2;
    double drop = 1e-2;
    double prop_depth = 1e-3;
    double prop_weight = 1e-3;
    double interlevel = 1e-3;
    double eps = 0.1;

    void validate() const;
};

// Patch feature extractor used for the perceptual term. Takes predicted
// patches (P,H,W,3) and the matching truth, returns a scalar.
using Perceptual = std::function<ad::Var(ad::Var, const Tensor&)>;

// Default perceptual surrogate: L1 distance between finite-difference image
// gradients of prediction and truth, taken at strides 1, 2 and 4 along both
// axes, averaged over the emitted terms.
ad::Var multiscale_gradient_l1(ad::Var pred, const Tensor& truth);

struct ImageLossTerms {
    ad::Var rgb;        // mean squared pixel error, unweighted
    ad::Var perceptual; // extractor output, unweighted
    ad::Var total;      // rgb * w.rgb + perceptual * w.vgg
};

// pred and truth are (P,H,W,3) patch stacks.
ImageLossTerms image_loss(ad::Var pred, const Tensor& truth, const LossWeights& w,
                          const Perceptual& perceptual = {});

// Ground truth for one batch of lidar rays. Entries for rays that dropped
// (no return) are ignored in depth[] and intensity[].
struct LidarTruth {
    std::vector<double> depth;     // hit distance per returned ray (m)
    std::vector<double> intensity; // [0,1] per returned ray
    std::vector<uint8_t> dropped;  // 1 when the ray had no return
    std::vector<double> max_range; // sensor range per ray (m)

    void validate(int64_t rays) const;
};

struct LidarLossTerms {
    ad::Var depth;        // per-ray mean, unweighted
    ad::Var intensity;    // per-ray mean, unweighted
    ad::Var drop;         // per-ray mean BCE, unweighted
    ad::Var weight_decay; // per-ray mean, unweighted
    ad::Var total;        // weighted sum of the four terms
};

// depth_pred/int_pred/pd_pred are (R,1); pd_pred must lie in (0,1).
// w and midpoints are (R,S) rendered sample weights and their ray offsets.
// Returned rays get squared depth and intensity errors. Dropped rays leave
// intensity unsupervised and penalize depth only when the prediction lies
// below the sensor range. All terms are normalized by the full ray count.
LidarLossTerms lidar_loss(ad::Var depth_pred, ad::Var int_pred, ad::Var pd_pred, ad::Var w,
                          const Tensor& midpoints, const LidarTruth& truth,
                          const LossWeights& lw);

// Sum of squared sample weights over samples farther than eps from the lidar
// hit. gamma holds those distances; entries <= eps contribute nothing.
ad::Var weight_decay_loss(ad::Var w, const Tensor& gamma, double eps);

// Distance-to-hit tensor for weight_decay_loss. Returned rays get
// |midpoint - hit|. Dropped rays are penalized everywhere below the sensor
// range (gamma = inf) and never beyond it (gamma = 0).
Tensor lidar_gamma(const Tensor& midpoints, const LidarTruth& truth);

} // namespace nff
