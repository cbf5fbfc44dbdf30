// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nff/rays.hpp"

using namespace nff;

namespace {

// camera on a platform moving +x at velocity v
SceneDesc moving_cam_scene(double v, double shutter) {
    SceneDesc s;
    s.scene_radius = 10;
    Sensor cam;
    cam.id = "cam";
    cam.type = Sensor::Type::camera;
    cam.cam = {16, 12, 20.0, 20.0, 8.0, 6.0, shutter, 3};
    cam.track.add(0.0, {Quat::Identity(), Vec3(0, 0, 0)});
    cam.track.add(1.0, {Quat::Identity(), Vec3(v, 0, 0)});
    s.sensors.push_back(cam);
    return s;
}

SceneDesc lidar_scene() {
    SceneDesc s;
    s.scene_radius = 10;
    Sensor li;
    li.id = "li";
    li.type = Sensor::Type::lidar;
    li.lidar.elevations = {-0.2, 0.0, 0.2};
    li.lidar.azimuth_bins = 360;
    li.lidar.max_range = 30;
    li.lidar.period = 0.1;
    li.lidar.div_h = 0.005;
    li.lidar.div_v = 0.005;
    li.track.add(0.0, {Quat::Identity(), Vec3::Zero()});
    s.sensors.push_back(li);
    return s;
}

} // namespace

TEST_CASE("camera shutter endpoints and per-row times") {
    SceneDesc s = moving_cam_scene(0.0, 0.06);
    const int H = s.sensors[0].cam.height;
    CHECK(camera_ray(s, 0, 0.2, 0, 0, true).time == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(camera_ray(s, 0, 0.2, 0, H - 1, true).time == doctest::Approx(0.26).epsilon(1e-12));
    // interior row matches the analytic line exactly
    for (int r : {1, 3, 7})
        CHECK(camera_ray(s, 0, 0.2, 2, r, true).time ==
              doctest::Approx(0.2 + 0.06 * r / double(H - 1)).epsilon(1e-15));
    // shutter disabled collapses all rows to t0
    CHECK(camera_ray(s, 0, 0.2, 0, H - 1, false).time == 0.2);
}

TEST_CASE("moving platform displaces last-row origins by v*T") {
    double v = 10.0, T = 0.05;
    SceneDesc s = moving_cam_scene(v, T);
    Ray first = camera_ray(s, 0, 0.1, 3, 0, true);
    Ray last = camera_ray(s, 0, 0.1, 3, s.sensors[0].cam.height - 1, true);
    CHECK((last.o - first.o - Vec3(v * T, 0, 0)).norm() < 1e-9);
    // each row origin matches analytic interpolation of the platform line
    for (int r : {0, 2, 5, 11}) {
        Ray rr = camera_ray(s, 0, 0.1, 0, r, true);
        CHECK((rr.o - Vec3(v * rr.time, 0, 0)).norm() < 1e-9);
    }
}

TEST_CASE("pinhole directions") {
    SceneDesc s = moving_cam_scene(0.0, 0.0);
    // cx = 8.0 means pixel ix=7 has center u=7.5; pick intrinsics hitting a center
    s.sensors[0].cam.cx = 7.5;
    s.sensors[0].cam.cy = 5.5;
    Ray r = camera_ray(s, 0, 0.0, 7, 5, true);
    CHECK((r.d - Vec3(1, 0, 0)).norm() < 1e-12); // principal point -> optical axis
    // one pixel right of center points toward -y
    Ray right = camera_ray(s, 0, 0.0, 8, 5, true);
    CHECK(right.d.y() < 0);
    CHECK(right.d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(right.div_h == doctest::Approx(1.0 / 20.0).epsilon(1e-12));
    // pixel below center points toward -z
    CHECK(camera_ray(s, 0, 0.0, 7, 6, true).d.z() < 0);
    CHECK_THROWS_AS(camera_ray(s, 0, 0.0, 99, 0, true), Error);
}

TEST_CASE("global shutter shares one origin and time") {
    SceneDesc s = moving_cam_scene(10.0, 0.0);
    auto rays = camera_rays(s, 0, 0.3, true);
    for (const Ray& r : rays) {
        CHECK(r.time == 0.3);
        CHECK((r.o - rays[0].o).norm() == 0);
    }
}

TEST_CASE("lidar azimuth timing") {
    SceneDesc s = lidar_scene();
    CHECK(lidar_ray(s, 0, 0.5, 0, 0.0, true).time == 0.5);
    CHECK(lidar_ray(s, 0, 0.5, 0, M_PI, true).time == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(lidar_ray(s, 0, 0.5, 0, M_PI, false).time == 0.5);
}

TEST_CASE("lidar directions from azimuth and elevation") {
    SceneDesc s = lidar_scene();
    Ray r = lidar_ray(s, 0, 0.0, 1, M_PI / 2, true); // elevation 0, azimuth 90
    CHECK((r.d - Vec3(0, 1, 0)).norm() < 1e-12);
    Ray up = lidar_ray(s, 0, 0.0, 2, 0.0, true);
    CHECK(up.d.z() == doctest::Approx(std::sin(0.2)).epsilon(1e-12));
    CHECK(up.d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(lidar_ray(s, 0, 0.0, 5, 0.0, true), Error);
    CHECK_THROWS_AS(lidar_ray(s, 0, 0.0, 0, 7.0, true), Error);
}

TEST_CASE("full sweep covers the diode x azimuth grid with times in span") {
    SceneDesc s = lidar_scene();
    auto rays = lidar_sweep_rays(s, 0, 1.0, true);
    CHECK(rays.size() == 3 * 360);
    for (const Ray& r : rays) {
        CHECK(r.time >= 1.0);
        CHECK(r.time < 1.0 + s.sensors[0].lidar.period);
        CHECK(r.div_h > 0);
        CHECK(r.div_v > 0);
    }
    // azimuth bin annotation matches construction order
    CHECK(rays[0].a == 0);
    CHECK(rays[0].b == 0);
    CHECK(rays[360 + 5].a == 5);
    CHECK(rays[360 + 5].b == 1);
}
