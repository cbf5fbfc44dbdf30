// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/rays.hpp"

namespace nff {

Ray camera_ray(const SceneDesc& sc, int sensor_idx, double t0, int ix, int iy, bool shutter) {
    const Sensor& sn = sc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::camera, ErrKind::config, sn.id, " is not a camera");
    const CameraIntrinsics& cam = sn.cam;
    NFF_CHECK(ix >= 0 && ix < cam.width && iy >= 0 && iy < cam.height, ErrKind::config,
              "pixel (", ix, ",", iy, ") outside ", cam.width, "x", cam.height);

    Ray r;
    r.sensor = sensor_idx;
    r.a = ix;
    r.b = iy;
    r.time = camera_row_time(cam, t0, iy, shutter);
    Pose pose = sn.track.at(r.time);
    r.o = pose.t;
    double u = ix + 0.5, v = iy + 0.5;
    Vec3 d_local(1.0, -(u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy);
    r.d = pose.apply_dir(d_local.normalized());
    // angular footprint of the RGB patch one feature ray represents: one
    // output pixel is 1/(f*upsampling), and a ray covers `upsampling` of them
    r.div_h = 1.0 / cam.fx;
    r.div_v = 1.0 / cam.fy;
    return r;
}

std::vector<Ray> camera_rays(const SceneDesc& sc, int sensor_idx, double t0, bool shutter) {
    const Sensor& sn = sc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::camera, ErrKind::config, sn.id, " is not a camera");
    std::vector<Ray> out;
    out.reserve(static_cast<size_t>(sn.cam.width) * static_cast<size_t>(sn.cam.height));
    for (int iy = 0; iy < sn.cam.height; ++iy)
        for (int ix = 0; ix < sn.cam.width; ++ix)
            out.push_back(camera_ray(sc, sensor_idx, t0, ix, iy, shutter));
    return out;
}

Ray lidar_ray(const SceneDesc& sc, int sensor_idx, double t0, int diode, double azimuth,
              bool shutter) {
    const Sensor& sn = sc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::lidar, ErrKind::config, sn.id, " is not a lidar");
    const LidarIntrinsics& li = sn.lidar;
    NFF_CHECK(diode >= 0 && diode < static_cast<int>(li.elevations.size()), ErrKind::config,
              "diode ", diode, " out of range");
    NFF_CHECK(azimuth >= 0 && azimuth < 2.0 * M_PI, ErrKind::config, "azimuth out of [0, 2pi)");

    Ray r;
    r.sensor = sensor_idx;
    r.a = static_cast<int>(azimuth / (2.0 * M_PI / li.azimuth_bins));
    r.b = diode;
    r.time = lidar_azimuth_time(li, t0, azimuth, shutter);
    Pose pose = sn.track.at(r.time);
    r.o = pose.t;
    r.d = pose.apply_dir(spherical_dir(azimuth, li.elevations[static_cast<size_t>(diode)]));
    r.div_h = li.div_h;
    r.div_v = li.div_v;
    return r;
}

std::vector<Ray> lidar_sweep_rays(const SceneDesc& sc, int sensor_idx, double t0, bool shutter) {
    const Sensor& sn = sc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::lidar, ErrKind::config, sn.id, " is not a lidar");
    const LidarIntrinsics& li = sn.lidar;
    double step = 2.0 * M_PI / li.azimuth_bins;
    std::vector<Ray> out;
    out.reserve(li.elevations.size() * static_cast<size_t>(li.azimuth_bins));
    for (size_t k = 0; k < li.elevations.size(); ++k)
        for (int a = 0; a < li.azimuth_bins; ++a)
            out.push_back(lidar_ray(sc, sensor_idx, t0, static_cast<int>(k), a * step, shutter));
    return out;
}

} // namespace nff
