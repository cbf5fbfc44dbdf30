// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Lidar preparation: undo ego-motion compensation, convert returns to
// per-ray spherical measurements, recover diode indices by histogram
// clustering, and infill azimuth bins without a return as dropped rays.

#pragma once

#include <string>
#include <vector>

#include "nff/scene.hpp"

namespace nff {

struct LidarPoint {
    double r = 0.0;         // meters; 0 for dropped rays
    double azimuth = 0.0;   // radians in [0, 2pi)
    double elevation = 0.0; // radians
    int diode = 0;
    double intensity = 0.0; // in [0,1]; dropped rays carry none (0)
    double time = 0.0;      // absolute capture time, seconds
    bool returned = true;
};

struct LidarSweep {
    std::string sensor_id;
    double start_time = 0.0;
    std::vector<LidarPoint> points;
};

struct Spherical {
    double r, elevation, azimuth;
};

// Re-express world-frame points in the sensor frame at each point's own
// capture time.
std::vector<Vec3> uncompensate_sweep(const std::vector<Vec3>& world,
                                     const std::vector<double>& times, const PoseTrack& track);

// r = |x|, elevation = asin(z/r), azimuth = atan2(y, x). Zero vector errors.
Spherical to_spherical(const Vec3& x);
Vec3 from_spherical(const Spherical& s);

// wrap an angle into [0, 2pi)
double wrap_azimuth(double a);

struct DiodeAssignment {
    std::vector<int> diode;         // per input point
    std::vector<double> boundaries; // sorted interval edges, size diodes-1
};

// Histogram-based diode clustering. Expected equally spaced boundaries are
// confirmed when they fall in (or within 0.03 deg of) an empty histogram
// bin; unconfirmed ones are re-inserted at the midpoint of the widest gap.
// Points exactly on a boundary belong to the lower interval. When
// `expected` is empty the boundaries are derived from the elevation span.
DiodeAssignment assign_diodes_full(const std::vector<double>& elevations, int diodes,
                                   const std::vector<double>& expected = {});
std::vector<int> assign_diodes(const std::vector<double>& elevations, int diodes,
                               const std::vector<double>& expected = {});

struct InfillConfig {
    std::vector<int> exclude_rows; // diode rows never infilled (ego vehicle)
};

// Per diode, every azimuth bin without an entry becomes a dropped ray with
// azimuth/elevation/time linearly interpolated between its returned
// neighbors. Idempotent: existing dropped entries occupy their bins.
LidarSweep infill_missing(const LidarSweep& sweep, const LidarIntrinsics& rig,
                          const InfillConfig& cfg = {});

// Full pipeline for one sweep of ego-motion-compensated world points.
struct RawCloud {
    std::vector<double> x, y, z, intensity, time;
};

LidarSweep prep_sweep(const RawCloud& cloud, const Sensor& sensor, double start_time,
                      const InfillConfig& cfg = {});

// Columnar little-endian binary files; layouts documented in lidar_prep.cpp.
void save_raw_cloud(const std::string& path, const RawCloud& cloud);
RawCloud load_raw_cloud(const std::string& path);
void save_sweep(const std::string& path, const LidarSweep& sweep);
LidarSweep load_sweep(const std::string& path);

} // namespace nff
