// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#include "nff/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nff {

namespace {

using json = nlohmann::json;

// JSON has no +inf literal; the PSNR identical-image sentinel round-trips
// through null.
json psnr_to_json(double v) { return std::isinf(v) ? json() : json(v); }
double psnr_from_json(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

constexpr int kWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 1e-4; // (0.01 * L)^2, L = 1
constexpr double kC2 = 9e-4; // (0.03 * L)^2

void check_pair(const Image& pred, const Image& truth) {
    NFF_CHECK(pred.width == truth.width && pred.height == truth.height, ErrKind::config,
              "image shapes differ: ", pred.width, "x", pred.height, " vs ", truth.width, "x",
              truth.height);
    NFF_CHECK(pred.width > 0 && pred.height > 0, ErrKind::config, "empty images");
    for (double v : pred.rgb)
        NFF_CHECK(v >= -1e-9 && v <= 1.0 + 1e-9, ErrKind::data,
                  "prediction values must lie in [0,1], got ", v);
    for (double v : truth.rgb)
        NFF_CHECK(v >= -1e-9 && v <= 1.0 + 1e-9, ErrKind::data,
                  "truth values must lie in [0,1], got ", v);
}

std::vector<double> luma_plane(const Image& img) {
    std::vector<double> out(static_cast<size_t>(img.width) * static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out[static_cast<size_t>(y) * static_cast<size_t>(img.width) +
                static_cast<size_t>(x)] =
                0.2126 * img.at(y, x, 0) + 0.7152 * img.at(y, x, 1) + 0.0722 * img.at(y, x, 2);
    return out;
}

double median_abs(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + lo);
    }
    return m;
}

json metrics_to_json(const EvalReport& r) {
    json j;
    j["split"] = r.split;
    j["config_hash"] = r.config_hash;
    j["frames"] = json::array();
    for (const FrameMetrics& f : r.frames)
        j["frames"].push_back({{"sensor", f.sensor_id},
                               {"frame", f.frame},
                               {"psnr", psnr_to_json(f.psnr)},
                               {"ssim", f.ssim}});
    j["sweeps"] = json::array();
    for (const SweepMetrics& s : r.sweeps)
        j["sweeps"].push_back({{"sensor", s.sensor_id},
                               {"frame", s.frame},
                               {"depth_median_l2", s.depth_median_l2},
                               {"intensity_rmse", s.intensity_rmse},
                               {"drop_accuracy", s.drop_accuracy},
                               {"chamfer", s.chamfer}});
    j["aggregate"] = {{"psnr", psnr_to_json(r.mean_psnr)},
                      {"ssim", r.mean_ssim},
                      {"depth_median_l2", r.mean_depth_median_l2},
                      {"intensity_rmse", r.mean_intensity_rmse},
                      {"drop_accuracy", r.mean_drop_accuracy},
                      {"chamfer", r.mean_chamfer}};
    j["lpips"] = std::isnan(r.lpips) ? json() : json(r.lpips);
    j["fid"] = std::isnan(r.fid) ? json() : json(r.fid);
    return j;
}

} // namespace

double psnr(const Image& pred, const Image& truth) {
    check_pair(pred, truth);
    double mse = 0.0;
    for (size_t i = 0; i < pred.rgb.size(); ++i) {
        const double d = pred.rgb[i] - truth.rgb[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.rgb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& pred, const Image& truth) {
    check_pair(pred, truth);
    NFF_CHECK(pred.width >= kWindow && pred.height >= kWindow, ErrKind::config,
              "ssim needs at least ", kWindow, "x", kWindow, " images, got ", pred.width, "x",
              pred.height);
    const std::vector<double> a = luma_plane(pred);
    const std::vector<double> b = luma_plane(truth);
    const int w = pred.width, h = pred.height;

    double kernel[kWindow][kWindow];
    double ksum = 0.0;
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
            const double dy = i - (kWindow - 1) / 2.0, dx = j - (kWindow - 1) / 2.0;
            kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
            ksum += kernel[i][j];
        }
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) kernel[i][j] /= ksum;

    double total = 0.0;
    int64_t windows = 0;
    for (int y = 0; y + kWindow <= h; ++y)
        for (int x = 0; x + kWindow <= w; ++x) {
            double mx = 0, my = 0;
            for (int i = 0; i < kWindow; ++i)
                for (int j = 0; j < kWindow; ++j) {
                    const size_t idx = static_cast<size_t>(y + i) * static_cast<size_t>(w) +
                                       static_cast<size_t>(x + j);
                    mx += kernel[i][j] * a[idx];
                    my += kernel[i][j] * b[idx];
                }
            double vx = 0, vy = 0, cov = 0;
            for (int i = 0; i < kWindow; ++i)
                for (int j = 0; j < kWindow; ++j) {
                    const size_t idx = static_cast<size_t>(y + i) * static_cast<size_t>(w) +
                                       static_cast<size_t>(x + j);
                    const double da = a[idx] - mx, db = b[idx] - my;
                    vx += kernel[i][j] * da * da;
                    vy += kernel[i][j] * db * db;
                    cov += kernel[i][j] * da * db;
                }
            total += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
                     ((mx * mx + my * my + kC1) * (vx + vy + kC2));
            ++windows;
        }
    return total / static_cast<double>(windows);
}

double chamfer_normalized(const std::vector<Vec3>& pred, const std::vector<Vec3>& truth) {
    NFF_CHECK(!pred.empty() && !truth.empty(), ErrKind::data,
              "chamfer distance needs non-empty clouds");
    auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double sum = 0.0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
            sum += std::sqrt(best);
        }
        return sum;
    };
    return (directed(pred, truth) + directed(truth, pred)) / static_cast<double>(truth.size());
}

RaydropMetrics raydrop_metrics(const std::vector<double>& p_d,
                               const std::vector<double>& depth_pred,
                               const std::vector<double>& intensity_pred,
                               const LidarTruth& truth) {
    const size_t n = p_d.size();
    NFF_CHECK(depth_pred.size() == n && intensity_pred.size() == n, ErrKind::config,
              "prediction arrays must align");
    truth.validate(static_cast<int64_t>(n));
    NFF_CHECK(n > 0, ErrKind::data, "no rays to score");

    RaydropMetrics out;
    int64_t correct = 0;
    std::vector<double> depth_err;
    double int_sq = 0.0;
    int64_t returned = 0;
    for (size_t i = 0; i < n; ++i) {
        const bool pred_drop = p_d[i] > 0.5;
        const bool is_drop = truth.dropped[i] != 0;
        correct += (pred_drop == is_drop) ? 1 : 0;
        if (is_drop) continue;
        ++returned;
        depth_err.push_back(std::abs(depth_pred[i] - truth.depth[i]));
        const double d = intensity_pred[i] - truth.intensity[i];
        int_sq += d * d;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.depth_median_l2 = median_abs(std::move(depth_err));
    out.intensity_rmse =
        returned > 0 ? std::sqrt(int_sq / static_cast<double>(returned)) : 0.0;
    return out;
}

void EvalReport::compute_aggregates() {
    mean_psnr = mean_ssim = 0.0;
    for (const FrameMetrics& f : frames) {
        mean_psnr += f.psnr;
        mean_ssim += f.ssim;
    }
    if (!frames.empty()) {
        mean_psnr /= static_cast<double>(frames.size());
        mean_ssim /= static_cast<double>(frames.size());
    }
    mean_depth_median_l2 = mean_intensity_rmse = mean_drop_accuracy = mean_chamfer = 0.0;
    for (const SweepMetrics& s : sweeps) {
        mean_depth_median_l2 += s.depth_median_l2;
        mean_intensity_rmse += s.intensity_rmse;
        mean_drop_accuracy += s.drop_accuracy;
        mean_chamfer += s.chamfer;
    }
    if (!sweeps.empty()) {
        mean_depth_median_l2 /= static_cast<double>(sweeps.size());
        mean_intensity_rmse /= static_cast<double>(sweeps.size());
        mean_drop_accuracy /= static_cast<double>(sweeps.size());
        mean_chamfer /= static_cast<double>(sweeps.size());
    }
}

std::string EvalReport::to_json() const { return metrics_to_json(*this).dump(2); }

EvalReport EvalReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    EvalReport r;
    r.split = j.at("split").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const json& f : j.at("frames"))
        r.frames.push_back({f.at("sensor").get<std::string>(), f.at("frame").get<int>(),
                            psnr_from_json(f.at("psnr")), f.at("ssim").get<double>()});
    for (const json& s : j.at("sweeps"))
        r.sweeps.push_back({s.at("sensor").get<std::string>(), s.at("frame").get<int>(),
                            s.at("depth_median_l2").get<double>(),
                            s.at("intensity_rmse").get<double>(),
                            s.at("drop_accuracy").get<double>(), s.at("chamfer").get<double>()});
    if (!j.at("lpips").is_null()) r.lpips = j.at("lpips").get<double>();
    if (!j.at("fid").is_null()) r.fid = j.at("fid").get<double>();
    r.compute_aggregates();
    return r;
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "split,psnr,ssim,lpips,depth_median_l2,intensity_rmse,drop_accuracy,chamfer,fid\n";
    out << split << "," << mean_psnr << "," << mean_ssim << ",";
    if (!std::isnan(lpips)) out << lpips;
    out << "," << mean_depth_median_l2 << "," << mean_intensity_rmse << ","
        << mean_drop_accuracy << "," << mean_chamfer << ",";
    if (!std::isnan(fid)) out << fid;
    out << "\n";
    return out.str();
}

} // namespace nff
