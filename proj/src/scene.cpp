// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/scene.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace nff {

using json = nlohmann::json;

namespace {

json pose_to_json(double t, const Pose& p) {
    return json{{"time", t},
                {"rotation", {p.q.w(), p.q.x(), p.q.y(), p.q.z()}},
                {"translation", {p.t.x(), p.t.y(), p.t.z()}}};
}

PoseTrack track_from_json(const json& arr, const char* what) {
    PoseTrack tk;
    NFF_CHECK(arr.is_array() && !arr.empty(), ErrKind::data, what, ": needs at least one pose");
    for (const auto& j : arr) {
        auto r = j.at("rotation");
        auto tr = j.at("translation");
        NFF_CHECK(r.size() == 4 && tr.size() == 3, ErrKind::data, what, ": malformed pose");
        Pose p;
        p.q = Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>());
        NFF_CHECK(std::abs(p.q.norm() - 1.0) < 1e-6, ErrKind::data, what, ": non-unit quaternion");
        p.q.normalize();
        p.t = Vec3(tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>());
        tk.add(j.at("time").get<double>(), p);
    }
    return tk;
}

json track_to_json(const PoseTrack& tk) {
    json arr = json::array();
    for (size_t i = 0; i < tk.times.size(); ++i) arr.push_back(pose_to_json(tk.times[i], tk.poses[i]));
    return arr;
}

} // namespace

SceneDesc SceneDesc::load(const std::string& path) {
    std::ifstream in(path);
    NFF_CHECK(in.good(), ErrKind::data, "cannot open scene file: ", path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrKind::data, str("scene json parse error in ", path, ": ", e.what()));
    }

    SceneDesc s;
    s.name = j.value("name", "");
    s.scene_radius = j.at("scene_radius").get<double>();
    NFF_CHECK(s.scene_radius > 0, ErrKind::data, "scene_radius must be positive");
    for (const auto& f : j.value("frames", json::array()))
        s.frames.push_back({f.at("index").get<int>(), f.at("time").get<double>()});

    for (const auto& a : j.value("actors", json::array())) {
        ActorTrajectory tr;
        auto e = a.at("extents");
        NFF_CHECK(e.size() == 3, ErrKind::data, "actor extents must have 3 entries");
        tr.extents = Vec3(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
        NFF_CHECK(tr.extents.minCoeff() > 0, ErrKind::data, "actor extents must be positive");
        tr.symmetric = a.value("symmetric", false);
        tr.track = track_from_json(a.at("keyframes"), "actor keyframes");
        s.actors.push_back(std::move(tr));
    }

    for (const auto& c : j.value("sensors", json::array())) {
        Sensor sn;
        sn.id = c.at("id").get<std::string>();
        std::string ty = c.at("type").get<std::string>();
        sn.embedding_index = c.at("embedding_index").get<int>();
        sn.track = track_from_json(c.at("poses"), "sensor poses");
        if (ty == "camera") {
            sn.type = Sensor::Type::camera;
            const auto& k = c.at("camera");
            sn.cam.width = k.at("width").get<int>();
            sn.cam.height = k.at("height").get<int>();
            NFF_CHECK(sn.cam.width > 0 && sn.cam.height > 0, ErrKind::data,
                      "camera resolution must be positive");
            sn.cam.fx = k.at("fx").get<double>();
            sn.cam.fy = k.at("fy").get<double>();
            sn.cam.cx = k.at("cx").get<double>();
            sn.cam.cy = k.at("cy").get<double>();
            sn.cam.shutter = k.value("shutter", 0.0);
            sn.cam.upsampling = k.value("upsampling", 3);
        } else if (ty == "lidar") {
            sn.type = Sensor::Type::lidar;
            const auto& k = c.at("lidar");
            for (const auto& e : k.at("elevations_deg"))
                sn.lidar.elevations.push_back(e.get<double>() * M_PI / 180.0);
            NFF_CHECK(std::is_sorted(sn.lidar.elevations.begin(), sn.lidar.elevations.end()),
                      ErrKind::data, "lidar elevations must be sorted ascending");
            sn.lidar.azimuth_bins = k.at("azimuth_bins").get<int>();
            sn.lidar.max_range = k.at("max_range").get<double>();
            sn.lidar.period = k.at("period").get<double>();
            NFF_CHECK(sn.lidar.azimuth_bins > 0 && sn.lidar.max_range > 0 && sn.lidar.period > 0,
                      ErrKind::data, "lidar intrinsics must be positive");
            sn.lidar.div_h = k.value("divergence_h_deg", 0.0) * M_PI / 180.0;
            sn.lidar.div_v = k.value("divergence_v_deg", 0.0) * M_PI / 180.0;
            if (sn.lidar.div_h <= 0) sn.lidar.div_h = 2.0 * M_PI / sn.lidar.azimuth_bins;
            if (sn.lidar.div_v <= 0) {
                size_t nd = sn.lidar.elevations.size();
                sn.lidar.div_v = nd > 1 ? (sn.lidar.elevations.back() - sn.lidar.elevations.front()) /
                                              static_cast<double>(nd - 1)
                                        : sn.lidar.div_h;
            }
        } else {
            fail(ErrKind::data, str("unknown sensor type: ", ty));
        }
        s.sensors.push_back(std::move(sn));
    }
    return s;
}

void SceneDesc::save(const std::string& path) const {
    json j;
    j["name"] = name;
    j["scene_radius"] = scene_radius;
    j["frames"] = json::array();
    for (const auto& f : frames) j["frames"].push_back({{"index", f.index}, {"time", f.time}});
    j["actors"] = json::array();
    for (const auto& a : actors) {
        json ja;
        ja["extents"] = {a.extents.x(), a.extents.y(), a.extents.z()};
        ja["symmetric"] = a.symmetric;
        ja["keyframes"] = track_to_json(a.track);
        j["actors"].push_back(std::move(ja));
    }
    j["sensors"] = json::array();
    for (const auto& sn : sensors) {
        json js;
        js["id"] = sn.id;
        js["embedding_index"] = sn.embedding_index;
        js["poses"] = track_to_json(sn.track);
        if (sn.type == Sensor::Type::camera) {
            js["type"] = "camera";
            js["camera"] = {{"width", sn.cam.width}, {"height", sn.cam.height},
                            {"fx", sn.cam.fx},       {"fy", sn.cam.fy},
                            {"cx", sn.cam.cx},       {"cy", sn.cam.cy},
                            {"shutter", sn.cam.shutter}, {"upsampling", sn.cam.upsampling}};
        } else {
            js["type"] = "lidar";
            json elev = json::array();
            for (double e : sn.lidar.elevations) elev.push_back(e * 180.0 / M_PI);
            js["lidar"] = {{"elevations_deg", elev},
                           {"azimuth_bins", sn.lidar.azimuth_bins},
                           {"max_range", sn.lidar.max_range},
                           {"period", sn.lidar.period},
                           {"divergence_h_deg", sn.lidar.div_h * 180.0 / M_PI},
                           {"divergence_v_deg", sn.lidar.div_v * 180.0 / M_PI}};
        }
        j["sensors"].push_back(std::move(js));
    }
    std::ofstream out(path);
    NFF_CHECK(out.good(), ErrKind::data, "cannot write scene file: ", path);
    out << j.dump(2) << "\n";
}

int SceneDesc::classify(const Vec3& x_world, double t) const {
    for (size_t i = 0; i < actors.size(); ++i) {
        Vec3 xl = actors[i].track.at(t).inv_apply(x_world);
        if (actors[i].contains_local(xl)) return static_cast<int>(i);
    }
    return -1;
}

const Sensor& SceneDesc::sensor(const std::string& id) const {
    for (const auto& s : sensors)
        if (s.id == id) return s;
    fail(ErrKind::data, str("unknown sensor id: ", id));
}

} // namespace nff
