#include "morpinet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morpinet/errors.hpp"
#include "morpinet/io.hpp"

namespace morpinet {

using json = nlohmann::json;

ImuStream load_imu(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty IMU file");

    ImuStream out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 7 columns, got " + std::to_string(f.size()));
        }
        ImuSample m;
        m.t = parse_double(f[0], path, line_no);
        m.f_b = {parse_double(f[1], path, line_no), parse_double(f[2], path, line_no),
                 parse_double(f[3], path, line_no)};
        m.w_b = {parse_double(f[4], path, line_no), parse_double(f[5], path, line_no),
                 parse_double(f[6], path, line_no)};
        if (!m.finite()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": non-finite sample");
        }
        if (!out.empty() && m.t <= out.back().t) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": timestamps not strictly increasing");
        }
        out.push_back(m);
    }
    if (out.empty()) throw DataError(path + ": no samples");
    return out;
}

RtkStream load_rtk(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty RTK file");

    RtkStream out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 3 columns, got " + std::to_string(f.size()));
        }
        RtkFix fix{parse_double(f[0], path, line_no), parse_double(f[1], path, line_no),
                   parse_double(f[2], path, line_no)};
        if (!std::isfinite(fix.t) || !std::isfinite(fix.e) || !std::isfinite(fix.n)) {
            throw DataError(path + ":" + std::to_string(line_no) + ": non-finite fix");
        }
        if (!out.empty() && fix.t <= out.back().t) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": timestamps not strictly increasing");
        }
        out.push_back(fix);
    }
    if (out.empty()) throw DataError(path + ": no fixes");
    return out;
}

namespace {

// First time a series stays above `threshold` for `sustain` seconds.
std::optional<double> onset_time(const std::vector<double>& t,
                                 const std::vector<double>& value, double threshold,
                                 double sustain) {
    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] > threshold) {
            if (!in_run) {
                run_start = i;
                in_run = true;
            }
            if (t[i] - t[run_start] >= sustain) return t[run_start];
        } else {
            in_run = false;
        }
    }
    return std::nullopt;
}

}  // namespace

SyncResult synchronize(const ImuStream& imu, const RtkStream& rtk) {
    if (imu.size() < 10 || rtk.size() < 5) {
        throw DataError("synchronize: streams too short");
    }

    // Gyro energy, with the initial quiescent level as baseline.
    std::vector<double> t_imu, gyro_mag;
    t_imu.reserve(imu.size());
    gyro_mag.reserve(imu.size());
    for (const auto& m : imu) {
        t_imu.push_back(m.t);
        gyro_mag.push_back(m.w_b.norm());
    }
    const std::size_t n_base = std::min<std::size_t>(imu.size() / 4, 240);
    double base = 0.0;
    for (std::size_t i = 0; i < n_base; ++i) base += gyro_mag[i];
    base /= static_cast<double>(std::max<std::size_t>(n_base, 1));
    const double gyro_thresh = base + 0.05;  // rad/s above the quiescent level

    const auto imu_onset = onset_time(t_imu, gyro_mag, gyro_thresh, 0.2);
    if (!imu_onset) throw DataError("synchronize: no motion onset in the IMU stream");

    std::vector<double> t_rtk, displacement;
    t_rtk.reserve(rtk.size());
    displacement.reserve(rtk.size());
    for (const auto& f : rtk) {
        t_rtk.push_back(f.t);
        displacement.push_back(std::hypot(f.e - rtk.front().e, f.n - rtk.front().n));
    }
    const auto rtk_onset = onset_time(t_rtk, displacement, 0.5, 0.2);
    if (!rtk_onset) throw DataError("synchronize: no motion onset in the RTK stream");

    SyncResult out;
    out.imu_onset = *imu_onset;
    out.rtk_onset = *rtk_onset;
    out.offset = *rtk_onset - *imu_onset;
    out.imu = imu;
    for (auto& m : out.imu) m.t += out.offset;
    out.rtk = rtk;
    return out;
}

CalibrationRecord static_calibrate(const ImuStream& imu, double t_start, double t_end,
                                   const LocalFrameConfig& cfg) {
    if (t_end - t_start < 3.0) {
        throw DataError("static_calibrate: span must cover at least 3 s");
    }
    Eigen::Vector3d f_sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d w_sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d w_sq = Eigen::Vector3d::Zero();
    std::size_t n = 0;
    for (const auto& m : imu) {
        if (m.t < t_start || m.t > t_end) continue;
        f_sum += m.f_b;
        w_sum += m.w_b;
        w_sq += m.w_b.cwiseProduct(m.w_b);
        ++n;
    }
    if (n < 2) throw DataError("static_calibrate: no samples inside the span");

    const Eigen::Vector3d w_mean = w_sum / static_cast<double>(n);
    const Eigen::Vector3d w_var =
        w_sq / static_cast<double>(n) - w_mean.cwiseProduct(w_mean);
    // Rotating platforms show gyro levels far above sensor noise.
    if (w_mean.norm() > 0.05 || std::sqrt(w_var.maxCoeff()) > 0.05) {
        throw DataError("static_calibrate: motion detected inside the calibration span");
    }

    CalibrationRecord rec;
    rec.gyro_bias = w_mean;
    rec.accel_bias = f_sum / static_cast<double>(n) -
                     Eigen::Vector3d(0.0, 0.0, -cfg.gravity_magnitude);
    rec.t_start = t_start;
    rec.t_end = t_end;
    return rec;
}

double gt_distance(const RtkFix& a, const RtkFix& b) {
    return std::hypot(b.e - a.e, b.n - a.n);
}

double gt_heading(const RtkFix& a, const RtkFix& b) {
    if (gt_distance(a, b) < 0.01) {
        throw DataError("gt_heading: fixes closer than 1 cm");
    }
    return std::atan2(b.e - a.e, b.n - a.n);
}

WindowedDataset make_windows(const ImuStream& imu, const RtkStream& rtk, int window_len,
                             int hop, const std::string& trajectory_id) {
    if (window_len < 1 || hop < 1) throw DataError("make_windows: bad window/hop");
    if (imu.size() < static_cast<std::size_t>(window_len)) {
        throw DataError("make_windows: IMU stream shorter than one window");
    }
    if (rtk.size() < 3) throw DataError("make_windows: need at least 3 RTK fixes");

    const double imu_dt =
        (imu.back().t - imu.front().t) / static_cast<double>(imu.size() - 1);
    const double rtk_dt =
        (rtk.back().t - rtk.front().t) / static_cast<double>(rtk.size() - 1);
    const int samples_per_fix = static_cast<int>(std::lround(rtk_dt / imu_dt));
    if (samples_per_fix < 1) throw DataError("make_windows: RTK faster than IMU");
    const int fixes_per_window = window_len / samples_per_fix;  // nominally 2
    if (fixes_per_window < 1 || window_len % samples_per_fix != 0) {
        throw DataError("make_windows: window does not span a whole number of RTK fixes");
    }

    WindowedDataset ds;
    ds.trajectory_ids.push_back(trajectory_id);
    ds.hop = hop;

    std::size_t imu_cursor = 0;
    for (std::size_t i = 0; i + fixes_per_window < rtk.size(); ++i) {
        // Hop expressed in fixes; skip start fixes that are not on the hop grid.
        const int hop_fixes = std::max(1, hop / samples_per_fix);
        if (i % static_cast<std::size_t>(hop_fixes) != 0) continue;
        const RtkFix& a = rtk[i];
        const RtkFix& b = rtk[i + fixes_per_window];

        // Reject windows with dropped fixes inside the span.
        bool gap = false;
        for (std::size_t k = i; k < i + fixes_per_window; ++k) {
            if (rtk[k + 1].t - rtk[k].t > 1.5 * rtk_dt) {
                gap = true;
                break;
            }
        }
        if (gap) {
            ++ds.skipped;
            continue;
        }

        // First IMU sample at or after the window start.
        while (imu_cursor < imu.size() && imu[imu_cursor].t < a.t - 0.5 * imu_dt) {
            ++imu_cursor;
        }
        std::size_t start = imu_cursor;
        if (start + window_len > imu.size()) break;
        if (std::abs(imu[start].t - a.t) > 0.75 * imu_dt) {
            ++ds.skipped;  // IMU gap at the window start
            continue;
        }

        Window w;
        for (int s = 0; s < window_len; ++s) {
            const ImuSample& m = imu[start + s];
            w.at(0, s) = m.f_b.x();
            w.at(1, s) = m.f_b.y();
            w.at(2, s) = m.f_b.z();
            w.at(3, s) = m.w_b.x();
            w.at(4, s) = m.w_b.y();
            w.at(5, s) = m.w_b.z();
        }
        w.target = gt_distance(a, b);
        w.t_start = a.t;
        w.trajectory = 0;
        ds.windows.push_back(w);
    }
    return ds;
}

void merge_windows(WindowedDataset& into, const WindowedDataset& from) {
    const int base = static_cast<int>(into.trajectory_ids.size());
    into.trajectory_ids.insert(into.trajectory_ids.end(), from.trajectory_ids.begin(),
                               from.trajectory_ids.end());
    for (Window w : from.windows) {
        w.trajectory += base;
        into.windows.push_back(w);
    }
    into.skipped += from.skipped;
}

namespace {

TrajectoryRole role_from_string(const std::string& s) {
    if (s == "train") return TrajectoryRole::Train;
    if (s == "test") return TrajectoryRole::Test;
    if (s == "straight") return TrajectoryRole::Straight;
    throw DataError("manifest: unknown role '" + s + "'");
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    const json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError(path + ": invalid JSON");
    if (!j.contains("trajectories") || !j["trajectories"].is_array()) {
        throw DataError(path + ": manifest needs a 'trajectories' array");
    }
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    Manifest m;
    for (const auto& e : j["trajectories"]) {
        ManifestEntry entry;
        entry.id = e.at("id").get<std::string>();
        entry.role = role_from_string(e.at("role").get<std::string>());
        for (const auto& f : e.at("imu")) {
            entry.imu_files.push_back(resolve(f.get<std::string>()));
        }
        if (entry.imu_files.empty()) {
            throw DataError(path + ": trajectory '" + entry.id + "' lists no IMU files");
        }
        entry.rtk_file = resolve(e.at("rtk").get<std::string>());
        if (e.contains("static_span")) {
            entry.static_start = e["static_span"].at(0).get<double>();
            entry.static_end = e["static_span"].at(1).get<double>();
        }
        if (e.contains("known_distance")) {
            entry.known_distance = e["known_distance"].get<double>();
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

namespace {

constexpr char kCacheMagic[8] = {'M', 'N', 'W', 'C', '0', '0', '0', '1'};

// Per window: [trajectory (as double), t_start, target, 144 features].
std::vector<double> window_payload(const WindowedDataset& ds) {
    std::vector<double> payload;
    payload.reserve(ds.windows.size() * (3 + kWindowFlat));
    for (const auto& w : ds.windows) {
        payload.push_back(static_cast<double>(w.trajectory));
        payload.push_back(w.t_start);
        payload.push_back(w.target);
        payload.insert(payload.end(), w.x.begin(), w.x.end());
    }
    return payload;
}

}  // namespace

std::string window_dataset_digest(const WindowedDataset& ds) {
    const std::vector<double> payload = window_payload(ds);
    return digest_string(std::string(reinterpret_cast<const char*>(payload.data()),
                                     payload.size() * sizeof(double)));
}

void save_window_cache(const std::string& path, const WindowedDataset& ds) {
    const std::vector<double> payload = window_payload(ds);
    const std::string digest = digest_string(
        std::string(reinterpret_cast<const char*>(payload.data()),
                    payload.size() * sizeof(double)));

    json header;
    header["format_version"] = 1;
    header["n_windows"] = ds.windows.size();
    header["hop"] = ds.hop;
    header["skipped"] = ds.skipped;
    header["trajectory_ids"] = ds.trajectory_ids;
    header["channels"] = {"fx", "fy", "fz", "wx", "wy", "wz"};
    header["window_len"] = kWindowLen;
    header["digest"] = digest;
    const std::string head = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open window cache for writing: " + path);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    const std::uint64_t hlen = head.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw DataError("failed writing window cache: " + path);
}

WindowedDataset load_window_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open window cache: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(kCacheMagic)) != 0) {
        throw DataError("not a window cache (bad magic): " + path);
    }
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string head(hlen, '\0');
    in.read(head.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw DataError("truncated window cache header: " + path);
    const json header = json::parse(head, nullptr, false);
    if (header.is_discarded()) throw DataError("invalid window cache header: " + path);

    WindowedDataset ds;
    ds.trajectory_ids = header.at("trajectory_ids").get<std::vector<std::string>>();
    ds.hop = header.at("hop").get<int>();
    ds.skipped = header.at("skipped").get<std::size_t>();
    ds.digest = header.at("digest").get<std::string>();
    const auto n = header.at("n_windows").get<std::size_t>();

    std::vector<double> payload(n * (3 + kWindowFlat));
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!in) throw DataError("truncated window cache payload: " + path);

    ds.windows.resize(n);
    std::size_t pos = 0;
    for (auto& w : ds.windows) {
        w.trajectory = static_cast<int>(payload[pos++]);
        w.t_start = payload[pos++];
        w.target = payload[pos++];
        std::copy(payload.begin() + static_cast<std::ptrdiff_t>(pos),
                  payload.begin() + static_cast<std::ptrdiff_t>(pos + kWindowFlat),
                  w.x.begin());
        pos += kWindowFlat;
    }
    return ds;
}

}  // namespace morpinet
