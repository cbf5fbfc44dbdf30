// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#include "nff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nff/rays.hpp"
#include "nff/rng.hpp"

namespace nff {

namespace {

constexpr uint64_t kDropStream = 95;
constexpr uint64_t kNoiseStream = 96;
constexpr double kRayEps = 1e-9;

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

double lattice_value(uint64_t seed, int64_t ix, int64_t iy, int64_t iz) {
    const uint64_t h = static_cast<uint64_t>(ix) * 0x9E3779B97F4A7C15ull ^
                       static_cast<uint64_t>(iy) * 0xBF58476D1CE4E5B9ull ^
                       static_cast<uint64_t>(iz) * 0x94D049BB133111EBull;
    return rng::uniform(seed, kNoiseStream, h);
}

// Trilinear value noise in [0,1] with smoothstep interpolation.
double value_noise(uint64_t seed, const Vec3& x) {
    const double fx = std::floor(x.x()), fy = std::floor(x.y()), fz = std::floor(x.z());
    const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy),
                  iz = static_cast<int64_t>(fz);
    const double ux = smoothstep(x.x() - fx), uy = smoothstep(x.y() - fy),
                 uz = smoothstep(x.z() - fz);
    double acc = 0.0;
    for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy)
            for (int dz = 0; dz < 2; ++dz) {
                const double w = (dx ? ux : 1.0 - ux) * (dy ? uy : 1.0 - uy) *
                                 (dz ? uz : 1.0 - uz);
                acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
            }
    return acc;
}

double luminance(const Vec3& c) {
    return std::clamp(0.2126 * c.x() + 0.7152 * c.y() + 0.0722 * c.z(), 0.0, 1.0);
}

} // namespace

Vec3 SynthMaterial::albedo(const Vec3& local) const {
    switch (pattern) {
    case Pattern::flat:
        return color_a;
    case Pattern::checker: {
        const int64_t parity = static_cast<int64_t>(std::floor(local.x() / cell)) +
                               static_cast<int64_t>(std::floor(local.y() / cell)) +
                               static_cast<int64_t>(std::floor(local.z() / cell));
        return ((parity % 2 + 2) % 2) == 0 ? color_a : color_b;
    }
    case Pattern::noise: {
        const double v = value_noise(noise_seed, local / cell);
        return (1.0 - v) * color_a + v * color_b;
    }
    }
    return color_a;
}

double SynthPrimitive::sdf(const Vec3& x) const {
    switch (kind) {
    case Kind::plane:
        return (x - p).dot(n);
    case Kind::box: {
        const Vec3 q = (x - p).cwiseAbs() - half;
        const double outside = q.cwiseMax(0.0).norm();
        const double inside = std::min(q.maxCoeff(), 0.0);
        return outside + inside;
    }
    case Kind::sphere:
        return (x - p).norm() - radius;
    }
    return std::numeric_limits<double>::infinity();
}

double SynthPrimitive::intersect(const Vec3& o, const Vec3& d) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
    case Kind::plane: {
        const double denom = d.dot(n);
        if (std::abs(denom) < 1e-12) return inf;
        const double t = (p - o).dot(n) / denom;
        return t > kRayEps ? t : inf;
    }
    case Kind::box: {
        double t0 = -inf, t1 = inf;
        for (int i = 0; i < 3; ++i) {
            const double lo = p[i] - half[i], hi = p[i] + half[i];
            if (std::abs(d[i]) < 1e-15) {
                if (o[i] < lo || o[i] > hi) return inf;
                continue;
            }
            double a = (lo - o[i]) / d[i], b = (hi - o[i]) / d[i];
            if (a > b) std::swap(a, b);
            t0 = std::max(t0, a);
            t1 = std::min(t1, b);
        }
        if (t0 > t1) return inf;
        return t0 > kRayEps ? t0 : inf;
    }
    case Kind::sphere: {
        const Vec3 oc = o - p;
        const double b = oc.dot(d);
        const double c = oc.squaredNorm() - radius * radius;
        const double disc = b * b - c;
        if (disc < 0.0) return inf;
        const double sq = std::sqrt(disc);
        const double near = -b - sq, far = -b + sq;
        if (near > kRayEps) return near;
        return far > kRayEps ? far : inf;
    }
    }
    return inf;
}

SynthHit AnalyticScene::trace(const Vec3& o, const Vec3& d, double time) const {
    SynthHit best;
    for (size_t i = 0; i < prims.size(); ++i) {
        const SynthPrimitive& pr = prims[i];
        double t;
        if (pr.actor < 0) {
            t = pr.intersect(o, d);
        } else {
            const Pose pose = desc.actors.at(static_cast<size_t>(pr.actor)).track.at(time);
            t = pr.intersect(pose.inv_apply(o), pose.inv_apply_dir(d));
        }
        if (t < best.t) {
            best.t = t;
            best.prim = static_cast<int>(i);
        }
    }
    if (best.hit()) {
        const SynthPrimitive& pr = prims[static_cast<size_t>(best.prim)];
        Vec3 xl;
        if (pr.actor < 0) {
            xl = o + best.t * d;
        } else {
            const Pose pose = desc.actors.at(static_cast<size_t>(pr.actor)).track.at(time);
            xl = pose.inv_apply(o) + best.t * pose.inv_apply_dir(d);
        }
        best.albedo = pr.mat.albedo(xl);
    }
    return best;
}

double AnalyticScene::sdf(const Vec3& x, double time) const {
    double best = std::numeric_limits<double>::infinity();
    for (const SynthPrimitive& pr : prims) {
        if (pr.actor < 0) {
            best = std::min(best, pr.sdf(x));
        } else {
            const Pose pose = desc.actors.at(static_cast<size_t>(pr.actor)).track.at(time);
            best = std::min(best, pr.sdf(pose.inv_apply(x)));
        }
    }
    return best;
}

CameraFrame oracle_render_camera(const AnalyticScene& scene, int sensor_idx, double t0,
                                 bool shutter) {
    const Sensor& sn = scene.desc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::camera, ErrKind::config, sn.id, " is not a camera");
    const CameraIntrinsics& cam = sn.cam;
    NFF_CHECK(cam.width > 0 && cam.height > 0 && cam.upsampling > 0, ErrKind::config, sn.id,
              ": camera intrinsics incomplete");
    const int up = cam.upsampling;
    const int ow = cam.width * up, oh = cam.height * up;

    double gain = 1.0;
    if (!scene.sensor_gain.empty()) {
        NFF_CHECK(scene.sensor_gain.size() == scene.desc.sensors.size(), ErrKind::config,
                  "sensor_gain must match sensor count");
        gain = scene.sensor_gain[static_cast<size_t>(sensor_idx)];
    }

    CameraFrame out;
    out.t0 = t0;
    out.rgb = Image::create(ow, oh);
    out.depth.assign(static_cast<size_t>(ow) * static_cast<size_t>(oh),
                     std::numeric_limits<double>::infinity());
    for (int jy = 0; jy < oh; ++jy) {
        // each output row has its own capture time across the shutter span
        double time = t0;
        if (shutter && oh > 1 && cam.shutter > 0)
            time = t0 + cam.shutter * static_cast<double>(jy) / static_cast<double>(oh - 1);
        const Pose pose = sn.track.at(time);
        for (int jx = 0; jx < ow; ++jx) {
            const double u = (jx + 0.5) / static_cast<double>(up);
            const double v = (jy + 0.5) / static_cast<double>(up);
            const Vec3 dl(1.0, -(u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy);
            const Vec3 d = pose.apply_dir(dl.normalized());
            const SynthHit hit = scene.trace(pose.t, d, time);
            const Vec3 c = hit.hit() ? hit.albedo : scene.background;
            for (int ch = 0; ch < 3; ++ch) out.rgb.at(jy, jx, ch) = c[ch];
            if (hit.hit())
                out.depth[static_cast<size_t>(jy) * static_cast<size_t>(ow) +
                          static_cast<size_t>(jx)] = hit.t;
        }
    }
    return out;
}

LidarSweep oracle_render_lidar(const AnalyticScene& scene, int sensor_idx, double t0,
                               bool shutter, int sweep_index) {
    const Sensor& sn = scene.desc.sensors.at(static_cast<size_t>(sensor_idx));
    NFF_CHECK(sn.type == Sensor::Type::lidar, ErrKind::config, sn.id, " is not a lidar");
    const LidarIntrinsics& li = sn.lidar;
    NFF_CHECK(!li.elevations.empty() && li.azimuth_bins > 0 && li.max_range > 0,
              ErrKind::config, sn.id, ": lidar intrinsics incomplete");

    const int diodes = static_cast<int>(li.elevations.size());
    const double step = 2.0 * M_PI / li.azimuth_bins;
    LidarSweep sweep;
    sweep.sensor_id = sn.id;
    sweep.start_time = t0;
    sweep.points.reserve(static_cast<size_t>(diodes) * static_cast<size_t>(li.azimuth_bins));
    for (int k = 0; k < diodes; ++k)
        for (int a = 0; a < li.azimuth_bins; ++a) {
            const double az = a * step;
            const Ray ray = lidar_ray(scene.desc, sensor_idx, t0, k, az, shutter);
            const SynthHit hit = scene.trace(ray.o, ray.d, ray.time);

            LidarPoint pt;
            pt.azimuth = az;
            pt.elevation = li.elevations[static_cast<size_t>(k)];
            pt.diode = k;
            pt.time = ray.time;
            pt.returned = false;
            if (hit.hit() && hit.t <= li.max_range) {
                const uint64_t counter =
                    (static_cast<uint64_t>(sweep_index) * static_cast<uint64_t>(diodes) +
                     static_cast<uint64_t>(k)) *
                        static_cast<uint64_t>(li.azimuth_bins) +
                    static_cast<uint64_t>(a);
                const double drop_p = scene.prims[static_cast<size_t>(hit.prim)].mat.drop_prob;
                if (drop_p <= 0.0 || rng::uniform(scene.seed, kDropStream, counter) >= drop_p) {
                    pt.returned = true;
                    pt.r = hit.t;
                    pt.intensity = luminance(hit.albedo);
                }
            }
            sweep.points.push_back(pt);
        }
    return sweep;
}

RawCloud compensate_to_cloud(const LidarSweep& sweep, const Sensor& sensor) {
    NFF_CHECK(sensor.type == Sensor::Type::lidar, ErrKind::config, sensor.id, " is not a lidar");
    RawCloud cloud;
    for (const LidarPoint& pt : sweep.points) {
        if (!pt.returned) continue;
        const Vec3 local = from_spherical({pt.r, pt.elevation, pt.azimuth});
        const Vec3 world = sensor.track.at(pt.time).apply(local);
        cloud.x.push_back(world.x());
        cloud.y.push_back(world.y());
        cloud.z.push_back(world.z());
        cloud.intensity.push_back(pt.intensity);
        cloud.time.push_back(pt.time);
    }
    return cloud;
}

namespace {

PoseTrack line_track(const Vec3& from, const Vec3& to, double t0, double t1,
                     double yaw = 0.0) {
    const Quat q(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    PoseTrack track;
    track.add(t0, {q, from});
    track.add(t1, {q, to});
    return track;
}

SynthMaterial checker(const Vec3& a, const Vec3& b, double cell, double drop = 0.0) {
    SynthMaterial m;
    m.pattern = SynthMaterial::Pattern::checker;
    m.color_a = a;
    m.color_b = b;
    m.cell = cell;
    m.drop_prob = drop;
    return m;
}

SynthMaterial noise(const Vec3& a, const Vec3& b, double cell, uint64_t seed, double drop = 0.0) {
    SynthMaterial m;
    m.pattern = SynthMaterial::Pattern::noise;
    m.color_a = a;
    m.color_b = b;
    m.cell = cell;
    m.noise_seed = seed;
    m.drop_prob = drop;
    return m;
}

SynthMaterial flat(const Vec3& a, double drop = 0.0) {
    SynthMaterial m;
    m.color_a = a;
    m.drop_prob = drop;
    return m;
}

SynthPrimitive plane_prim(const Vec3& point, const Vec3& normal, SynthMaterial mat) {
    SynthPrimitive pr;
    pr.kind = SynthPrimitive::Kind::plane;
    pr.p = point;
    pr.n = normal.normalized();
    pr.mat = std::move(mat);
    return pr;
}

SynthPrimitive box_prim(const Vec3& center, const Vec3& half, SynthMaterial mat,
                        int actor = -1) {
    SynthPrimitive pr;
    pr.kind = SynthPrimitive::Kind::box;
    pr.p = center;
    pr.half = half;
    pr.mat = std::move(mat);
    pr.actor = actor;
    return pr;
}

SynthPrimitive sphere_prim(const Vec3& center, double radius, SynthMaterial mat) {
    SynthPrimitive pr;
    pr.kind = SynthPrimitive::Kind::sphere;
    pr.p = center;
    pr.radius = radius;
    pr.mat = std::move(mat);
    return pr;
}

std::vector<FrameRef> timeline(int frames, double dt) {
    std::vector<FrameRef> out;
    out.reserve(static_cast<size_t>(frames));
    for (int i = 0; i < frames; ++i) out.push_back({i, i * dt});
    return out;
}

Sensor make_camera(const std::string& id, int emb, PoseTrack track, double shutter) {
    Sensor s;
    s.id = id;
    s.type = Sensor::Type::camera;
    s.embedding_index = emb;
    s.cam.width = 64;
    s.cam.height = 48;
    s.cam.fx = s.cam.fy = 55.0;
    s.cam.cx = 32.0;
    s.cam.cy = 24.0;
    s.cam.shutter = shutter;
    s.cam.upsampling = 3;
    s.track = std::move(track);
    return s;
}

Sensor make_lidar(const std::string& id, int emb, PoseTrack track, std::vector<double> elev,
                  int bins, double range) {
    Sensor s;
    s.id = id;
    s.type = Sensor::Type::lidar;
    s.embedding_index = emb;
    s.lidar.elevations = std::move(elev);
    s.lidar.azimuth_bins = bins;
    s.lidar.max_range = range;
    s.lidar.period = 0.1;
    s.track = std::move(track);
    return s;
}

std::vector<double> even_elevations(double lo_deg, double hi_deg, int diodes) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(diodes));
    for (int i = 0; i < diodes; ++i) {
        const double deg = lo_deg + (hi_deg - lo_deg) * i / static_cast<double>(diodes - 1);
        out.push_back(deg * M_PI / 180.0);
    }
    return out;
}

// Room interior 16 x 16 x 4 m (|x|,|y| <= 8, 0 <= z <= 4) with a sphere and a
// box inside. Ego drives (-4,0) -> (4,0) over 5.75 s; camera at z=1.5, lidar
// at z=2.0. The ceiling drops 15% of lidar hits.
AnalyticScene cube_room(uint64_t seed) {
    AnalyticScene sc;
    sc.seed = seed;
    sc.desc.name = "cube-room";
    sc.desc.scene_radius = 12.0;
    sc.desc.frames = timeline(24, 0.25);
    const double tend = sc.desc.frames.back().time;

    sc.prims.push_back(plane_prim({0, 0, 0}, {0, 0, 1},
                                  checker({0.82, 0.80, 0.76}, {0.30, 0.30, 0.32}, 1.0)));
    sc.prims.push_back(plane_prim({0, 0, 4}, {0, 0, -1}, flat({0.92, 0.92, 0.92}, 0.15)));
    sc.prims.push_back(plane_prim({8, 0, 0}, {-1, 0, 0},
                                  noise({0.55, 0.62, 0.75}, {0.25, 0.28, 0.38}, 2.0, seed * 4 + 0)));
    sc.prims.push_back(plane_prim({-8, 0, 0}, {1, 0, 0},
                                  noise({0.70, 0.55, 0.45}, {0.35, 0.25, 0.20}, 2.0, seed * 4 + 1)));
    sc.prims.push_back(plane_prim({0, 8, 0}, {0, -1, 0},
                                  checker({0.75, 0.70, 0.50}, {0.40, 0.35, 0.22}, 2.0)));
    sc.prims.push_back(plane_prim({0, -8, 0}, {0, 1, 0},
                                  checker({0.50, 0.70, 0.55}, {0.22, 0.38, 0.28}, 2.0)));
    sc.prims.push_back(sphere_prim({4, 2, 1}, 1.0,
                                   noise({0.85, 0.30, 0.25}, {0.45, 0.10, 0.10}, 0.5, seed * 4 + 2)));
    sc.prims.push_back(box_prim({-3, -4, 0.75}, {0.75, 0.75, 0.75},
                                checker({0.30, 0.75, 0.40}, {0.10, 0.30, 0.15}, 0.5)));

    sc.desc.sensors.push_back(make_camera(
        "cam0", 0, line_track({-4, 0, 1.5}, {4, 0, 1.5}, 0.0, tend), 0.02));
    sc.desc.sensors.push_back(make_lidar("lidar0", 1,
                                         line_track({-4, 0, 2.0}, {4, 0, 2.0}, 0.0, tend),
                                         even_elevations(-35.0, 9.0, 12), 180, 60.0));
    return sc;
}

// cube-room plus one box actor (1.2 x 0.8 x 0.8 m) crossing the room at
// x = 3 from y = -4 to y = 4 over the full span.
AnalyticScene cube_room_actor(uint64_t seed) {
    AnalyticScene sc = cube_room(seed);
    sc.desc.name = "cube-room+actor";
    const double tend = sc.desc.frames.back().time;

    ActorTrajectory actor;
    actor.extents = {1.2, 0.8, 0.8};
    actor.track = line_track({3, -4, 0.4}, {3, 4, 0.4}, 0.0, tend);
    sc.desc.actors.push_back(actor);
    sc.prims.push_back(box_prim({0, 0, 0}, {0.6, 0.4, 0.4},
                                checker({0.95, 0.85, 0.20}, {0.20, 0.18, 0.10}, 0.25, 0.05), 0));
    return sc;
}

// Straight road: ground plane, poles every 20 m at y = +-6, a lead car
// (20 m/s, lane y = -1.75) and an oncoming car (20 m/s, lane y = +1.75,
// yaw pi). Ego drives x = -47.5 -> 47.5 at 25 m/s over 3.8 s; camera shutter
// 50 ms; lidar 16 diodes, 240 bins, 120 m range.
AnalyticScene highway(uint64_t seed) {
    AnalyticScene sc;
    sc.seed = seed;
    sc.desc.name = "highway";
    sc.desc.scene_radius = 60.0;
    sc.desc.frames = timeline(20, 0.2);
    const double tend = sc.desc.frames.back().time;

    sc.prims.push_back(plane_prim({0, 0, 0}, {0, 0, 1},
                                  checker({0.42, 0.42, 0.44}, {0.33, 0.33, 0.35}, 2.0, 0.02)));
    for (int k = 0; k <= 6; ++k) {
        const double x = -60.0 + 20.0 * k;
        sc.prims.push_back(box_prim({x, 6.0, 2.5}, {0.1, 0.1, 2.5}, flat({0.80, 0.78, 0.72})));
        sc.prims.push_back(box_prim({x, -6.0, 2.5}, {0.1, 0.1, 2.5}, flat({0.80, 0.78, 0.72})));
    }

    ActorTrajectory lead;
    lead.extents = {4.5, 1.9, 1.5};
    lead.track = line_track({-10, -1.75, 0.75}, {66, -1.75, 0.75}, 0.0, tend);
    sc.desc.actors.push_back(lead);
    sc.prims.push_back(box_prim({0, 0, 0}, {2.25, 0.95, 0.75},
                                checker({0.80, 0.15, 0.15}, {0.95, 0.92, 0.90}, 0.5, 0.05), 0));

    ActorTrajectory oncoming;
    oncoming.extents = {4.5, 1.9, 1.5};
    oncoming.track = line_track({60, 1.75, 0.75}, {-16, 1.75, 0.75}, 0.0, tend, M_PI);
    sc.desc.actors.push_back(oncoming);
    sc.prims.push_back(box_prim({0, 0, 0}, {2.25, 0.95, 0.75},
                                noise({0.20, 0.35, 0.80}, {0.08, 0.12, 0.35}, 0.7, seed * 4 + 3,
                                      0.05),
                                1));

    sc.desc.sensors.push_back(make_camera(
        "cam0", 0, line_track({-47.5, 0, 1.6}, {47.5, 0, 1.6}, 0.0, tend), 0.05));
    sc.desc.sensors.push_back(make_lidar("lidar0", 1,
                                         line_track({-47.5, 0, 2.2}, {47.5, 0, 2.2}, 0.0, tend),
                                         even_elevations(-18.0, 3.0, 16), 240, 120.0));
    return sc;
}

} // namespace

const std::vector<std::string>& scene_presets() {
    static const std::vector<std::string> names = {"cube-room", "cube-room+actor", "highway"};
    return names;
}

AnalyticScene build_scene(const std::string& preset, uint64_t seed) {
    if (preset == "cube-room") return cube_room(seed);
    if (preset == "cube-room+actor") return cube_room_actor(seed);
    if (preset == "highway") return highway(seed);
    std::string known;
    for (const std::string& n : scene_presets()) known += (known.empty() ? "" : ", ") + n;
    NFF_CHECK(false, ErrKind::config, "unknown preset '", preset, "', presets: ", known);
    return {};
}

void write_dataset(const AnalyticScene& scene, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "depth");
    fs::create_directories(fs::path(dir) / "lidar");
    fs::create_directories(fs::path(dir) / "sweeps");
    scene.desc.save((fs::path(dir) / "scene.json").string());

    char tag[16];
    for (const FrameRef& fr : scene.desc.frames) {
        std::snprintf(tag, sizeof tag, "%03d", fr.index);
        for (size_t si = 0; si < scene.desc.sensors.size(); ++si) {
            const Sensor& sn = scene.desc.sensors[si];
            const std::string stem = sn.id + "_" + tag;
            if (sn.type == Sensor::Type::camera) {
                CameraFrame frame =
                    oracle_render_camera(scene, static_cast<int>(si), fr.time, true);
                save_image((fs::path(dir) / "images" / (stem + ".img")).string(), frame.rgb);
                save_depth((fs::path(dir) / "depth" / (stem + ".dep")).string(), frame.depth,
                           frame.rgb.width, frame.rgb.height);
            } else {
                LidarSweep sweep =
                    oracle_render_lidar(scene, static_cast<int>(si), fr.time, true, fr.index);
                save_sweep((fs::path(dir) / "sweeps" / (stem + ".sweep")).string(), sweep);
                save_raw_cloud((fs::path(dir) / "lidar" / (stem + ".cloud")).string(),
                               compensate_to_cloud(sweep, sn));
            }
        }
    }
}

} // namespace nff
