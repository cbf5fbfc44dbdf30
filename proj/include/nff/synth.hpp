// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// Fully known synthetic scenes: primitives with exact SDFs and procedural
// albedo, actors bound to keyframed trajectories, and analytic renderers for
// rolling-shutter cameras and spinning lidars. Every training target can be
// regenerated from closed forms, so rendered datasets double as oracles.

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "nff/image.hpp"
#include "nff/lidar_prep.hpp"
#include "nff/scene.hpp"

namespace nff {

struct SynthMaterial {
    enum class Pattern { flat, checker, noise };
    Pattern pattern = Pattern::flat;
    Vec3 color_a = Vec3(0.8, 0.8, 0.8);
    Vec3 color_b = Vec3(0.2, 0.2, 0.2);
    double cell = 1.0;      // pattern cell size, meters
    double drop_prob = 0.0; // lidar drop probability on hit
    uint64_t noise_seed = 0;

    // View-independent albedo at a surface point in the primitive's frame.
    Vec3 albedo(const Vec3& local) const;
};

struct SynthPrimitive {
    enum class Kind { plane, box, sphere };
    Kind kind = Kind::sphere;
    int actor = -1;           // -1 static; else geometry lives in that actor's frame
    Vec3 p = Vec3::Zero();    // plane point / box center / sphere center
    Vec3 n = Vec3::UnitZ();   // plane normal; the solid half-space is behind it
    Vec3 half = Vec3::Ones(); // box half extents
    double radius = 1.0;
    SynthMaterial mat;

    // Exact signed distance in the primitive's own frame.
    double sdf(const Vec3& x) const;
    // First intersection distance along a unit ray, or +inf.
    double intersect(const Vec3& o, const Vec3& d) const;
};

struct SynthHit {
    double t = std::numeric_limits<double>::infinity();
    int prim = -1;
    Vec3 albedo = Vec3::Zero();

    bool hit() const { return prim >= 0; }
};

struct AnalyticScene {
    SceneDesc desc;
    std::vector<SynthPrimitive> prims;
    Vec3 background = Vec3(0.55, 0.70, 0.88);
    uint64_t seed = 0;
    // Per-sensor exposure gain applied to rendered camera colors (empty means
    // 1.0 everywhere). Lets multi-camera rigs disagree about appearance.
    std::vector<double> sensor_gain;

    // Nearest surface along a unit world ray at the given time; actors are
    // intersected in their interpolated local frames.
    SynthHit trace(const Vec3& o, const Vec3& d, double time) const;
    // Scene SDF: minimum over all primitives at the given time.
    double sdf(const Vec3& x, double time) const;
};

// Presets: "cube-room" (static room interior), "cube-room+actor" (one moving
// box actor), "cube-room-2cam" (the actor scene with a second, dimmer camera
// and a short-range lidar), "highway" (ground plane, poles, two actors, ego
// at 25 m/s). Dimensions are documented at the builders in synth.cpp.
AnalyticScene build_scene(const std::string& preset, uint64_t seed);
const std::vector<std::string>& scene_presets();

struct CameraFrame {
    Image rgb;                 // at upsampled (output) resolution
    std::vector<double> depth; // meters at the same resolution, +inf on miss
    double t0 = 0;
};

// Exact per-pixel render at the camera's output resolution. With shutter on,
// each output row gets its own capture time across the shutter interval and
// actor and sensor poses are evaluated at that time.
CameraFrame oracle_render_camera(const AnalyticScene& scene, int sensor_idx, double t0,
                                 bool shutter = true);

// Ideal sweep with one entry per diode x azimuth bin. Entries drop when the
// beam misses, the hit lies beyond the sensor range, or the material's drop
// rule fires (deterministic in the scene seed and sweep_index).
LidarSweep oracle_render_lidar(const AnalyticScene& scene, int sensor_idx, double t0,
                               bool shutter = true, int sweep_index = 0);

// Ego-motion-compensated world-point cloud of the returned points: the form
// real exports arrive in, and the input lidar preparation expects.
RawCloud compensate_to_cloud(const LidarSweep& sweep, const Sensor& sensor);

// Renders every frame of the scene's timeline into a dataset directory:
// scene.json, images/<cam>_<frame>.img, depth/<cam>_<frame>.dep,
// lidar/<lidar>_<frame>.cloud (raw clouds), sweeps/<lidar>_<frame>.sweep
// (ideal sweeps, the evaluation truth).
void write_dataset(const AnalyticScene& scene, const std::string& dir);

} // namespace nff
