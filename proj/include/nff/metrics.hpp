// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Evaluation metrics: PSNR, SSIM, normalized Chamfer distance, ray-drop
// accuracy, depth median L2, intensity RMSE, and the serialized report.
// All metrics are pure functions.

#pragma once

#include <string>
#include <vector>

#include "nff/geometry.hpp"
#include "nff/image.hpp"
#include "nff/losses.hpp"

namespace nff {

// 10*log10(1/MSE) over all channels; +inf when the images are identical.
double psnr(const Image& pred, const Image& truth);

// Mean local structural similarity on the luma plane: 11x11 Gaussian window
// (sigma 1.5), stabilizers C1=1e-4, C2=9e-4 for a unit dynamic range, valid
// windows only. Errors when either dimension is below the window.
double ssim(const Image& pred, const Image& truth);

// Symmetric nearest-neighbor distance sum divided by the ground-truth point
// count. Callers exclude predicted-dropped rays (p_d > 0.5) beforehand.
double chamfer_normalized(const std::vector<Vec3>& pred, const std::vector<Vec3>& truth);

struct RaydropMetrics {
    double accuracy = 0;        // predicted dropped when p_d > 0.5
    double depth_median_l2 = 0; // median |depth error| over returned rays
    double intensity_rmse = 0;  // root mean square over returned rays
};

// Aligned per-ray predictions against sweep truth; depth and intensity are
// scored on truly returned rays only.
RaydropMetrics raydrop_metrics(const std::vector<double>& p_d,
                               const std::vector<double>& depth_pred,
                               const std::vector<double>& intensity_pred,
                               const LidarTruth& truth);

struct FrameMetrics {
    std::string sensor_id;
    int frame = 0;
    double psnr = 0;
    double ssim = 0;
};

struct SweepMetrics {
    std::string sensor_id;
    int frame = 0;
    double depth_median_l2 = 0;
    double intensity_rmse = 0;
    double drop_accuracy = 0;
    double chamfer = 0;
};

struct EvalReport {
    std::string split;
    std::string config_hash;
    std::vector<FrameMetrics> frames;
    std::vector<SweepMetrics> sweeps;

    // Means over frames (image metrics) and over sweeps (lidar metrics,
    // Chamfer per sweep then mean).
    double mean_psnr = 0;
    double mean_ssim = 0;
    double mean_depth_median_l2 = 0;
    double mean_intensity_rmse = 0;
    double mean_drop_accuracy = 0;
    double mean_chamfer = 0;

    // Reserved for external tools with pretrained networks; NaN means unset
    // and serializes as null.
    double lpips = std::numeric_limits<double>::quiet_NaN();
    double fid = std::numeric_limits<double>::quiet_NaN();

    void compute_aggregates();
    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
    // One header plus one row of the aggregate image and lidar columns.
    std::string to_csv() const;
};

} // namespace nff
