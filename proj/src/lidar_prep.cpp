// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#include "nff/lidar_prep.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace nff {

std::vector<Vec3> uncompensate_sweep(const std::vector<Vec3>& world,
                                     const std::vector<double>& times, const PoseTrack& track) {
    NFF_CHECK(world.size() == times.size(), ErrKind::data,
              "uncompensate: point/time count mismatch");
    std::vector<Vec3> out(world.size());
    for (size_t i = 0; i < world.size(); ++i)
        out[i] = track.at(times[i]).inv_apply(world[i]);
    return out;
}

Spherical to_spherical(const Vec3& x) {
    double r = x.norm();
    NFF_CHECK(r > 0.0, ErrKind::data, "to_spherical: zero vector");
    return {r, std::asin(x(2) / r), std::atan2(x(1), x(0))};
}

Vec3 from_spherical(const Spherical& s) {
    double ce = std::cos(s.elevation);
    return s.r * Vec3(ce * std::cos(s.azimuth), ce * std::sin(s.azimuth), std::sin(s.elevation));
}

double wrap_azimuth(double a) {
    double w = std::fmod(a, 2.0 * M_PI);
    if (w < 0) w += 2.0 * M_PI;
    return w;
}

DiodeAssignment assign_diodes_full(const std::vector<double>& elevations, int diodes,
                                   const std::vector<double>& expected) {
    NFF_CHECK(diodes >= 1, ErrKind::config, "assign_diodes: diode count must be positive");
    NFF_CHECK(static_cast<int>(elevations.size()) >= diodes, ErrKind::data,
              "assign_diodes: fewer points than diodes");
    DiodeAssignment out;
    out.diode.assign(elevations.size(), 0);
    if (diodes == 1) return out;

    auto [mn_it, mx_it] = std::minmax_element(elevations.begin(), elevations.end());
    const double mn = *mn_it, mx = *mx_it;
    NFF_CHECK(mx > mn, ErrKind::data, "assign_diodes: degenerate elevation span");

    constexpr int kBins = 2000;
    const double w = (mx - mn) / kBins;
    auto bin_of = [&](double e) {
        return std::min(static_cast<int>((e - mn) / w), kBins - 1);
    };
    std::vector<int> hist(kBins, 0);
    for (double e : elevations) ++hist[bin_of(e)];

    std::vector<double> exp_b = expected;
    if (exp_b.empty()) {
        // diode centers assumed equally spaced between the extreme returns
        double spacing = (mx - mn) / (diodes - 1);
        for (int k = 1; k < diodes; ++k) exp_b.push_back(mn + spacing * (k - 0.5));
    }
    NFF_CHECK(static_cast<int>(exp_b.size()) == diodes - 1, ErrKind::config,
              "assign_diodes: expected boundary count mismatch");
    std::sort(exp_b.begin(), exp_b.end());

    // a boundary is confirmed when an empty histogram bin lies within the
    // tolerance; the boundary keeps its hypothesized position
    const double tol = 0.03 * M_PI / 180.0;
    std::vector<double> bounds;
    for (double b : exp_b) {
        int lo = std::clamp(bin_of(std::max(mn, b - tol)), 0, kBins - 1);
        int hi = std::clamp(bin_of(std::min(mx, b + tol)), 0, kBins - 1);
        bool ok = false;
        for (int i = lo; i <= hi && !ok; ++i) {
            if (hist[i]) continue;
            double blo = mn + i * w, bhi = blo + w;
            double d = b < blo ? blo - b : (b > bhi ? b - bhi : 0.0);
            ok = d <= tol;
        }
        if (ok) bounds.push_back(b);
    }

    // re-insert unconfirmed boundaries at the midpoint of the widest gap,
    // lowest gap first on ties
    while (static_cast<int>(bounds.size()) < diodes - 1) {
        double best_lo = mn, best_w = -1.0, prev = mn;
        for (size_t i = 0; i <= bounds.size(); ++i) {
            double next = i < bounds.size() ? bounds[i] : mx;
            if (next - prev > best_w) {
                best_w = next - prev;
                best_lo = prev;
            }
            prev = next;
        }
        double mid = best_lo + best_w / 2.0;
        bounds.insert(std::lower_bound(bounds.begin(), bounds.end(), mid), mid);
    }

    // index = number of boundaries strictly below the point, so a point
    // exactly on a boundary lands in the lower interval
    for (size_t i = 0; i < elevations.size(); ++i)
        out.diode[i] = static_cast<int>(
            std::lower_bound(bounds.begin(), bounds.end(), elevations[i]) - bounds.begin());
    out.boundaries = std::move(bounds);
    return out;
}

std::vector<int> assign_diodes(const std::vector<double>& elevations, int diodes,
                               const std::vector<double>& expected) {
    return assign_diodes_full(elevations, diodes, expected).diode;
}

LidarSweep infill_missing(const LidarSweep& sweep, const LidarIntrinsics& rig,
                          const InfillConfig& cfg) {
    const int D = static_cast<int>(rig.elevations.size());
    const int B = rig.azimuth_bins;
    NFF_CHECK(D >= 1 && B >= 1, ErrKind::config, "infill: rig needs diodes and azimuth bins");
    const double dbin = 2.0 * M_PI / B;

    std::vector<uint8_t> excluded(static_cast<size_t>(D), 0);
    for (int r : cfg.exclude_rows) {
        NFF_CHECK(r >= 0 && r < D, ErrKind::config, "infill: excluded row out of range");
        excluded[static_cast<size_t>(r)] = 1;
    }

    // bin occupancy blocks infill; returned entries also anchor interpolation.
    // bins own [k*dbin, (k+1)*dbin); the epsilon keeps azimuths that land a
    // rounding error below an edge in the edge's own bin
    auto bin_of = [&](double az) {
        return static_cast<int>(az / dbin + 1e-9) % B;
    };
    std::vector<int64_t> anchor(static_cast<size_t>(D) * static_cast<size_t>(B), -1);
    std::vector<uint8_t> occupied(anchor.size(), 0);
    for (size_t i = 0; i < sweep.points.size(); ++i) {
        const LidarPoint& p = sweep.points[i];
        NFF_CHECK(p.diode >= 0 && p.diode < D, ErrKind::data, "infill: diode index out of range");
        size_t slot = static_cast<size_t>(p.diode) * static_cast<size_t>(B) +
                      static_cast<size_t>(bin_of(wrap_azimuth(p.azimuth)));
        occupied[slot] = 1;
        if (p.returned && anchor[slot] < 0) anchor[slot] = static_cast<int64_t>(i);
    }

    LidarSweep out = sweep;
    for (int d = 0; d < D; ++d) {
        if (excluded[static_cast<size_t>(d)]) continue;
        std::vector<int> abins;
        for (int k = 0; k < B; ++k)
            if (anchor[static_cast<size_t>(d) * B + k] >= 0) abins.push_back(k);

        for (int k = 0; k < B; ++k) {
            size_t slot = static_cast<size_t>(d) * B + static_cast<size_t>(k);
            if (occupied[slot]) continue;
            LidarPoint p;
            p.diode = d;
            p.r = 0.0;
            p.intensity = 0.0;
            p.returned = false;
            if (abins.empty()) {
                p.azimuth = k * dbin; // rays fire at bin left edges
                p.elevation = rig.elevations[static_cast<size_t>(d)];
                p.time = sweep.start_time + rig.period * p.azimuth / (2.0 * M_PI);
            } else {
                // circularly bracketing returned neighbors
                auto it = std::upper_bound(abins.begin(), abins.end(), k);
                int br = it == abins.end() ? abins.front() : *it;
                int bl = it == abins.begin() ? abins.back() : *(it - 1);
                const LidarPoint& L =
                    sweep.points[static_cast<size_t>(anchor[static_cast<size_t>(d) * B + bl])];
                const LidarPoint& R =
                    sweep.points[static_cast<size_t>(anchor[static_cast<size_t>(d) * B + br])];
                int span = ((br - bl) % B + B) % B;
                if (span == 0) span = B; // single anchor row
                int off = ((k - bl) % B + B) % B;
                double f = static_cast<double>(off) / static_cast<double>(span);
                double daz = wrap_azimuth(R.azimuth - L.azimuth);
                if (daz == 0.0 && span == B) daz = 2.0 * M_PI;
                p.azimuth = wrap_azimuth(L.azimuth + f * daz);
                p.elevation = L.elevation + f * (R.elevation - L.elevation);
                if (R.time > L.time) {
                    p.time = L.time + f * (R.time - L.time);
                } else {
                    // the run crosses the sweep seam: continue from the left
                    // anchor at the rotation rate, or back off from the right
                    // anchor once past the end of the sweep
                    double dt = daz * rig.period / (2.0 * M_PI);
                    double fwd = L.time + f * dt;
                    p.time = fwd < sweep.start_time + rig.period ? fwd : R.time - (1.0 - f) * dt;
                }
            }
            out.points.push_back(p);
        }
    }
    return out;
}

LidarSweep prep_sweep(const RawCloud& cloud, const Sensor& sensor, double start_time,
                      const InfillConfig& cfg) {
    NFF_CHECK(sensor.type == Sensor::Type::lidar, ErrKind::config, "prep_sweep: not a lidar");
    const LidarIntrinsics& rig = sensor.lidar;
    const size_t n = cloud.x.size();
    NFF_CHECK(cloud.y.size() == n && cloud.z.size() == n && cloud.intensity.size() == n &&
                  cloud.time.size() == n,
              ErrKind::data, "prep_sweep: ragged raw cloud columns");

    std::vector<Vec3> world(n);
    for (size_t i = 0; i < n; ++i) world[i] = Vec3(cloud.x[i], cloud.y[i], cloud.z[i]);
    std::vector<Vec3> local = uncompensate_sweep(world, cloud.time, sensor.track);

    LidarSweep sweep;
    sweep.sensor_id = sensor.id;
    sweep.start_time = start_time;
    sweep.points.resize(n);
    std::vector<double> elev(n);
    for (size_t i = 0; i < n; ++i) {
        Spherical s = to_spherical(local[i]);
        NFF_CHECK(s.r <= rig.max_range, ErrKind::data,
                  str("prep_sweep: return beyond max range: ", s.r));
        NFF_CHECK(cloud.intensity[i] >= 0.0 && cloud.intensity[i] <= 1.0, ErrKind::data,
                  "prep_sweep: intensity outside [0,1]");
        LidarPoint& p = sweep.points[i];
        p.r = s.r;
        p.azimuth = wrap_azimuth(s.azimuth);
        p.elevation = s.elevation;
        p.intensity = cloud.intensity[i];
        p.time = cloud.time[i];
        p.returned = true;
        elev[i] = s.elevation;
    }
    // boundaries expected midway between the rig's known diode elevations
    std::vector<double> expected;
    for (size_t d = 1; d < rig.elevations.size(); ++d)
        expected.push_back(0.5 * (rig.elevations[d - 1] + rig.elevations[d]));
    std::vector<int> diode =
        assign_diodes(elev, static_cast<int>(rig.elevations.size()), expected);
    for (size_t i = 0; i < n; ++i) sweep.points[i].diode = diode[i];
    return infill_missing(sweep, rig, cfg);
}

// ---------------------------------------------------------------------------
// Columnar binary files, little-endian, no padding.
//
// Raw cloud ("NFFPC001"): magic[8], n: int64, then f64 columns
//   x[n], y[n], z[n], intensity[n], time[n].
// Sweep ("NFFSW001"): magic[8], id_len: int64, id bytes, start_time: f64,
//   n: int64, then columns r[n], azimuth[n], elevation[n] (f64),
//   diode[n] (int32), intensity[n], time[n] (f64), returned[n] (uint8).

namespace {

void write_bytes(std::ofstream& f, const void* p, size_t bytes) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void read_bytes(std::ifstream& f, void* p, size_t bytes, const std::string& path) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    NFF_CHECK(f.good(), ErrKind::data, str("truncated or unreadable file: ", path));
}

template <typename T>
void write_col(std::ofstream& f, const std::vector<T>& v) {
    write_bytes(f, v.data(), v.size() * sizeof(T));
}

template <typename T>
void read_col(std::ifstream& f, std::vector<T>& v, size_t n, const std::string& path) {
    v.resize(n);
    if (n) read_bytes(f, v.data(), n * sizeof(T), path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    NFF_CHECK(f.good(), ErrKind::data, str("cannot write ", path));
    return f;
}

std::ifstream open_in(const std::string& path, const char* magic) {
    std::ifstream f(path, std::ios::binary);
    NFF_CHECK(f.good(), ErrKind::data, str("cannot read ", path));
    char m[8];
    read_bytes(f, m, 8, path);
    NFF_CHECK(std::memcmp(m, magic, 8) == 0, ErrKind::data, str("bad magic in ", path));
    return f;
}

} // namespace

void save_raw_cloud(const std::string& path, const RawCloud& cloud) {
    const size_t n = cloud.x.size();
    NFF_CHECK(cloud.y.size() == n && cloud.z.size() == n && cloud.intensity.size() == n &&
                  cloud.time.size() == n,
              ErrKind::data, "save_raw_cloud: ragged columns");
    std::ofstream f = open_out(path);
    write_bytes(f, "NFFPC001", 8);
    int64_t cnt = static_cast<int64_t>(n);
    write_bytes(f, &cnt, sizeof(cnt));
    write_col(f, cloud.x);
    write_col(f, cloud.y);
    write_col(f, cloud.z);
    write_col(f, cloud.intensity);
    write_col(f, cloud.time);
    NFF_CHECK(f.good(), ErrKind::data, str("write failed: ", path));
}

RawCloud load_raw_cloud(const std::string& path) {
    std::ifstream f = open_in(path, "NFFPC001");
    int64_t cnt = 0;
    read_bytes(f, &cnt, sizeof(cnt), path);
    NFF_CHECK(cnt >= 0, ErrKind::data, str("bad point count in ", path));
    RawCloud c;
    size_t n = static_cast<size_t>(cnt);
    read_col(f, c.x, n, path);
    read_col(f, c.y, n, path);
    read_col(f, c.z, n, path);
    read_col(f, c.intensity, n, path);
    read_col(f, c.time, n, path);
    return c;
}

void save_sweep(const std::string& path, const LidarSweep& sweep) {
    std::ofstream f = open_out(path);
    write_bytes(f, "NFFSW001", 8);
    int64_t idlen = static_cast<int64_t>(sweep.sensor_id.size());
    write_bytes(f, &idlen, sizeof(idlen));
    write_bytes(f, sweep.sensor_id.data(), sweep.sensor_id.size());
    write_bytes(f, &sweep.start_time, sizeof(double));
    int64_t cnt = static_cast<int64_t>(sweep.points.size());
    write_bytes(f, &cnt, sizeof(cnt));
    size_t n = sweep.points.size();
    std::vector<double> col(n);
    auto dump = [&](auto get) {
        for (size_t i = 0; i < n; ++i) col[i] = get(sweep.points[i]);
        write_col(f, col);
    };
    dump([](const LidarPoint& p) { return p.r; });
    dump([](const LidarPoint& p) { return p.azimuth; });
    dump([](const LidarPoint& p) { return p.elevation; });
    std::vector<int32_t> diode(n);
    for (size_t i = 0; i < n; ++i) diode[i] = sweep.points[i].diode;
    write_col(f, diode);
    dump([](const LidarPoint& p) { return p.intensity; });
    dump([](const LidarPoint& p) { return p.time; });
    std::vector<uint8_t> ret(n);
    for (size_t i = 0; i < n; ++i) ret[i] = sweep.points[i].returned ? 1 : 0;
    write_col(f, ret);
    NFF_CHECK(f.good(), ErrKind::data, str("write failed: ", path));
}

LidarSweep load_sweep(const std::string& path) {
    std::ifstream f = open_in(path, "NFFSW001");
    int64_t idlen = 0;
    read_bytes(f, &idlen, sizeof(idlen), path);
    NFF_CHECK(idlen >= 0 && idlen < (1 << 20), ErrKind::data, str("bad id length in ", path));
    LidarSweep s;
    s.sensor_id.resize(static_cast<size_t>(idlen));
    if (idlen) read_bytes(f, s.sensor_id.data(), static_cast<size_t>(idlen), path);
    read_bytes(f, &s.start_time, sizeof(double), path);
    int64_t cnt = 0;
    read_bytes(f, &cnt, sizeof(cnt), path);
    NFF_CHECK(cnt >= 0, ErrKind::data, str("bad point count in ", path));
    size_t n = static_cast<size_t>(cnt);
    std::vector<double> r, az, el, inten, tm;
    std::vector<int32_t> diode;
    std::vector<uint8_t> ret;
    read_col(f, r, n, path);
    read_col(f, az, n, path);
    read_col(f, el, n, path);
    read_col(f, diode, n, path);
    read_col(f, inten, n, path);
    read_col(f, tm, n, path);
    read_col(f, ret, n, path);
    s.points.resize(n);
    for (size_t i = 0; i < n; ++i)
        s.points[i] = {r[i], az[i], el[i], diode[i], inten[i], tm[i], ret[i] != 0};
    return s;
}

} // namespace nff
