// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/geometry.hpp"

#include <algorithm>

namespace nff {

Mat3 rot6d_to_matrix(const double p[6]) {
    Vec3 a(p[0], p[1], p[2]), b(p[3], p[4], p[5]);
    NFF_CHECK(a.norm() > 1e-9, ErrKind::data, "rot6d: first vector near zero");
    Vec3 r1 = a.normalized();
    Vec3 c = b - r1.dot(b) * r1;
    NFF_CHECK(c.norm() > 1e-9, ErrKind::data, "rot6d: vectors near parallel");
    Vec3 r2 = c.normalized();
    Vec3 r3 = r1.cross(r2);
    Mat3 R;
    R.col(0) = r1;
    R.col(1) = r2;
    R.col(2) = r3;
    return R;
}

void PoseTrack::add(double t, const Pose& p) {
    NFF_CHECK(times.empty() || t > times.back(), ErrKind::data,
              "pose keyframe times must be strictly increasing (got ", t, " after ",
              times.empty() ? 0.0 : times.back(), ")");
    times.push_back(t);
    poses.push_back(p);
}

std::pair<size_t, double> PoseTrack::locate(double t) const {
    NFF_CHECK(!times.empty(), ErrKind::data, "empty pose track");
    if (times.size() == 1 || t <= times.front()) return {0, 0.0};
    if (t >= times.back()) return {times.size() - 2, 1.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    size_t k = static_cast<size_t>(it - times.begin()) - 1;
    double u = (t - times[k]) / (times[k + 1] - times[k]);
    return {k, u};
}

Pose PoseTrack::at(double t) const {
    auto [k, u] = locate(t);
    if (u == 0.0) return poses[k];
    if (u == 1.0) return poses[k + 1];
    return interp_pose(poses[k], poses[k + 1], u);
}

} // namespace nff
