// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Ray generation for rolling-shutter cameras and spinning lidars. Sensor
// frame: x forward, y left, z up. Camera image u grows rightward (-y),
// v grows downward (-z); rays pass through pixel centers.

#pragma once

#include <vector>

#include "nff/scene.hpp"

namespace nff {

struct Ray {
    Vec3 o = Vec3::Zero();
    Vec3 d = Vec3::UnitX(); // unit length
    double time = 0;
    double div_h = 0, div_v = 0; // radians
    int sensor = 0;              // index into SceneDesc::sensors
    int a = 0, b = 0;            // camera: (column, row); lidar: (azimuth bin, diode)
};

// Time of camera row r for a frame starting at t0.
inline double camera_row_time(const CameraIntrinsics& cam, double t0, int row, bool shutter) {
    if (!shutter || cam.height <= 1 || cam.shutter <= 0) return t0;
    return t0 + cam.shutter * static_cast<double>(row) / static_cast<double>(cam.height - 1);
}

// Time of a lidar firing at the given azimuth within a sweep starting at t0.
inline double lidar_azimuth_time(const LidarIntrinsics& li, double t0, double azimuth,
                                 bool shutter) {
    if (!shutter) return t0;
    return t0 + li.period * azimuth / (2.0 * M_PI);
}

// Direction in the sensor frame for (azimuth, elevation).
inline Vec3 spherical_dir(double azimuth, double elevation) {
    double ce = std::cos(elevation);
    return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

Ray camera_ray(const SceneDesc& sc, int sensor_idx, double t0, int ix, int iy, bool shutter);
std::vector<Ray> camera_rays(const SceneDesc& sc, int sensor_idx, double t0, bool shutter);

Ray lidar_ray(const SceneDesc& sc, int sensor_idx, double t0, int diode, double azimuth,
              bool shutter);
// Full diode x azimuth grid. Rays fire at azimuth bin left edges a*2pi/bins.
std::vector<Ray> lidar_sweep_rays(const SceneDesc& sc, int sensor_idx, double t0, bool shutter);

} // namespace nff
