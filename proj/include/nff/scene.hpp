// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Scene description: rigid actors with keyframed trajectories plus sensor
// rigs. Loaded from scene.json; learnable pose corrections live with the
// model, not here.

#pragma once

#include <string>
#include <vector>

#include "nff/geometry.hpp"

namespace nff {

struct ActorTrajectory {
    Vec3 extents = Vec3::Zero(); // full side lengths, box centered at local origin
    bool symmetric = false;      // mirror encoding across the local y=0 plane
    PoseTrack track;             // world <- actor

    // closed box: faces count as inside
    bool contains_local(const Vec3& xl) const {
        return std::abs(xl.x()) <= 0.5 * extents.x() && std::abs(xl.y()) <= 0.5 * extents.y() &&
               std::abs(xl.z()) <= 0.5 * extents.z();
    }
};

struct CameraIntrinsics {
    int width = 0, height = 0;   // feature-map resolution rays are cast at
    double fx = 0, fy = 0, cx = 0, cy = 0;
    double shutter = 0;          // seconds, row 0 to row H-1
    int upsampling = 3;          // RGB output is upsampling x feature resolution
};

struct LidarIntrinsics {
    std::vector<double> elevations; // radians, sorted ascending, one per diode
    int azimuth_bins = 0;
    double max_range = 0;  // meters
    double period = 0;     // seconds per revolution
    // beam divergences, radians; 0 means derive from angular resolution
    double div_h = 0, div_v = 0;
};

struct Sensor {
    enum class Type { camera, lidar };
    std::string id;
    Type type = Type::camera;
    int embedding_index = 0;
    CameraIntrinsics cam;
    LidarIntrinsics lidar;
    PoseTrack track; // world <- sensor
};

struct FrameRef {
    int index = 0;
    double time = 0;
};

struct SceneDesc {
    std::string name;
    double scene_radius = 10.0; // contraction scale, meters
    std::vector<FrameRef> frames;
    std::vector<ActorTrajectory> actors;
    std::vector<Sensor> sensors;

    static SceneDesc load(const std::string& path);
    void save(const std::string& path) const;

    // index of the first actor whose box contains x at time t, else -1
    int classify(const Vec3& x_world, double t) const;
    const Sensor& sensor(const std::string& id) const;
};

} // namespace nff
