// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Multiresolution grid geometry: level resolutions, dense-vs-hashed storage,
// scene contraction, and frustum anti-aliasing helpers. No autodiff here.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nff/common.hpp"
#include "nff/geometry.hpp"
#include "nff/kernels.hpp"

namespace nff {

struct HashGridConfig {
    int levels = 8;
    int feat = 4;
    int64_t table_size = 1 << 16; // power of two, rows per hashed level
    double base_res = 16.0;       // cells per axis at level 0
    double growth = 1.5;          // per-level resolution factor
    int n_actors = 0;             // 0: static 3D grid; >0: 4D actor grid
};

// Per-level storage layout. Levels whose vertex count fits in table_size are
// stored densely, removing hash collisions.
struct GridMeta {
    HashGridConfig cfg;
    std::vector<int64_t> res;     // cells per axis
    std::vector<int64_t> rows;    // table rows of the level
    std::vector<int64_t> row_off; // first row of the level
    std::vector<uint8_t> dense;
    int64_t total_rows = 0;

    static GridMeta build(const HashGridConfig& cfg);
    kernels::GridSpec spec(const int64_t* actor_idx) const;
};

// Norm-style contraction: identity inside the unit ball, norms approach 2
// at infinity.
inline Vec3 contract_raw(const Vec3& v) {
    NFF_CHECK(v.allFinite(), ErrKind::data, "contract_raw: non-finite input");
    double n = v.norm();
    return n <= 1.0 ? v : Vec3((2.0 - 1.0 / n) * v / n);
}

// Contraction of x/scene_radius mapped affinely into [0,1]^3.
inline Vec3 contract_point(const Vec3& x, double scene_radius) {
    Vec3 c = contract_raw(x / scene_radius);
    return (c + Vec3(2, 2, 2)) / 4.0;
}

// Determinant of the contraction Jacobian at normalized radius n = |x|/r.
inline double contraction_detj(double n) {
    if (n <= 1.0) return 1.0;
    double t = (2.0 * n - 1.0) / (n * n);
    return t * t / (n * n);
}

// Pyramidal frustum volume of a ray interval with cross-section A(tau) =
// div_h * div_v * tau^2.
inline double frustum_volume(double t0, double t1, double div_h, double div_v) {
    NFF_CHECK(t0 >= 0 && t1 > t0, ErrKind::data, "frustum_volume: need 0 <= t0 < t1");
    NFF_CHECK(div_h > 0 && div_v > 0, ErrKind::data, "frustum_volume: divergences must be > 0");
    double a0 = div_h * div_v * t0 * t0;
    double a1 = div_h * div_v * t1 * t1;
    return (t1 - t0) / 3.0 * (a0 + std::sqrt(a0 * a1) + a1);
}

// Anti-aliasing factor: fraction between cell size and frustum size, clamped.
// n_l is cells per meter at the sample.
inline double downweight(double n_l, double volume) {
    NFF_CHECK(n_l > 0 && volume >= 0, ErrKind::data, "downweight: bad arguments");
    if (volume == 0) return 1.0;
    return std::min(1.0, 1.0 / (n_l * std::cbrt(volume)));
}

// Cells per meter of static-grid level l at a sample with normalized radius
// n = |x|/scene_radius. The contracted cube [0,1]^3 spans 4*scene_radius
// meters inside the unit ball; outside, cells dilate by the contraction
// Jacobian, folded in as det(J)^(1/3).
inline double static_cells_per_meter(int64_t res_l, double scene_radius, double n) {
    return static_cast<double>(res_l) / (4.0 * scene_radius) * std::cbrt(contraction_detj(n));
}

// Cells per meter of actor-grid level l for a box with the given extents,
// using the geometric mean edge since normalization is anisotropic.
inline double actor_cells_per_meter(int64_t res_l, const Vec3& extents) {
    double mean_edge = std::cbrt(extents.x() * extents.y() * extents.z());
    return static_cast<double>(res_l) / mean_edge;
}

} // namespace nff
