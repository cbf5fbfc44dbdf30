// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Rigid poses and keyframed pose tracks. World frame is x-forward, y-left,
// z-up; a Pose maps local coordinates into its parent frame.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

#include "nff/common.hpp"

namespace nff {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

struct Pose {
    Quat q = Quat::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 apply(const Vec3& x) const { return q * x + t; }
    Vec3 apply_dir(const Vec3& d) const { return q * d; }
    Vec3 inv_apply(const Vec3& x) const { return q.conjugate() * (x - t); }
    Vec3 inv_apply_dir(const Vec3& d) const { return q.conjugate() * d; }

    Pose inverse() const { return {q.conjugate(), q.conjugate() * (-t)}; }
    // this acting after other: result maps other's local frame to this->parent
    Pose compose(const Pose& o) const { return {(q * o.q).normalized(), q * o.t + t}; }
    Mat3 rotation() const { return q.toRotationMatrix(); }
};

// translation lerp, rotation slerp
inline Pose interp_pose(const Pose& a, const Pose& b, double u) {
    return {a.q.slerp(u, b.q), (1.0 - u) * a.t + u * b.t};
}

// Gram-Schmidt on the two 3-vectors, third axis by cross product. Columns of
// the result are the orthonormalized vectors.
Mat3 rot6d_to_matrix(const double p[6]);

// Keyframed pose track with clamped interpolation outside the time span.
struct PoseTrack {
    std::vector<double> times;
    std::vector<Pose> poses;

    void add(double t, const Pose& p);
    bool empty() const { return times.empty(); }
    // index of the segment containing t and the interpolation parameter
    std::pair<size_t, double> locate(double t) const;
    Pose at(double t) const;
};

} // namespace nff
