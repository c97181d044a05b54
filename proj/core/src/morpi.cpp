#include "morpinet/morpi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "morpinet/errors.hpp"
#include "morpinet/io.hpp"
#include "morpinet/quaternion.hpp"

namespace morpinet {

void PeakDetectConfig::validate(double fs) const {
    if (!(min_separation > 0.0)) throw NumericError("peak min_separation must be > 0");
    if (!(smoothing_cutoff > 0.0) || smoothing_cutoff >= 0.5 * fs) {
        throw NumericError("smoothing cutoff must lie in (0, fs/2)");
    }
}

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;
};

Biquad butterworth2(double fs, double cutoff_hz) {
    const double c = 1.0 / std::tan(M_PI * cutoff_hz / fs);
    const double c2 = c * c;
    const double a0 = 1.0 / (1.0 + M_SQRT2 * c + c2);
    return {a0, 2.0 * a0, a0, 2.0 * (1.0 - c2) * a0, (1.0 - M_SQRT2 * c + c2) * a0};
}

void filter_in_place(const Biquad& f, std::vector<double>& x) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    // Prime the delay line as if the signal had been at x[0] forever.
    x1 = x2 = x.front();
    y1 = y2 = x.front();
    for (double& v : x) {
        const double y = f.b0 * v + f.b1 * x1 + f.b2 * x2 - f.a1 * y1 - f.a2 * y2;
        x2 = x1;
        x1 = v;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

std::size_t warmup_samples(double fs, double cutoff_hz) {
    return static_cast<std::size_t>(std::ceil(fs / cutoff_hz));
}

}  // namespace

std::vector<double> lowpass_zero_phase(const std::vector<double>& x, double fs,
                                       double cutoff_hz) {
    const std::size_t n = x.size();
    const std::size_t pad = std::min(n - 1, 3 * warmup_samples(fs, cutoff_hz));

    // Reflect-pad both ends, filter forward then backward, strip the padding.
    std::vector<double> y;
    y.reserve(n + 2 * pad);
    for (std::size_t i = pad; i > 0; --i) y.push_back(2.0 * x[0] - x[i]);
    y.insert(y.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) y.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    const Biquad f = butterworth2(fs, cutoff_hz);
    filter_in_place(f, y);
    std::reverse(y.begin(), y.end());
    filter_in_place(f, y);
    std::reverse(y.begin(), y.end());

    return {y.begin() + static_cast<std::ptrdiff_t>(pad),
            y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

// Prominence of a local maximum: height above the higher of the two lowest points
// on the paths toward the nearest higher terrain (or the series edges).
double prominence_at(const std::vector<double>& y, std::size_t peak) {
    const double h = y[peak];
    double left_min = h;
    for (std::size_t i = peak; i-- > 0;) {
        if (y[i] > h) break;
        left_min = std::min(left_min, y[i]);
    }
    double right_min = h;
    for (std::size_t i = peak + 1; i < y.size(); ++i) {
        if (y[i] > h) break;
        right_min = std::min(right_min, y[i]);
    }
    return h - std::max(left_min, right_min);
}

}  // namespace

std::vector<std::size_t> detect_peaks(const std::vector<double>& signal, double fs,
                                      const PeakDetectConfig& cfg) {
    cfg.validate(fs);
    if (signal.size() < 3) throw DataError("detect_peaks requires at least 3 samples");
    if (signal.size() < warmup_samples(fs, cfg.smoothing_cutoff)) {
        throw DataError("series shorter than the smoothing filter warm-up");
    }

    const std::vector<double> y = lowpass_zero_phase(signal, fs, cfg.smoothing_cutoff);

    double min_prom = cfg.min_prominence;
    if (min_prom < 0.0) {
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) /
                            static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size());
        min_prom = 0.5 * std::sqrt(var);
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            if (prominence_at(y, i) >= min_prom) candidates.push_back(i);
        }
    }

    // Enforce minimum separation, keeping taller peaks first.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y[candidates[a]] > y[candidates[b]];
    });
    const double min_gap = cfg.min_separation * fs;
    std::vector<bool> keep(candidates.size(), false);
    for (std::size_t oi : order) {
        bool ok = true;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (keep[k] && std::abs(static_cast<double>(candidates[oi]) -
                                    static_cast<double>(candidates[k])) < min_gap) {
                ok = false;
                break;
            }
        }
        if (ok) keep[oi] = true;
    }

    std::vector<std::size_t> peaks;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (keep[k]) peaks.push_back(candidates[k]);
    }
    return peaks;
}

std::string morpi_mode_name(MorpiMode m) {
    return m == MorpiMode::AccelY ? "A" : "G";
}

MorpiMode morpi_mode_from_name(const std::string& s) {
    if (s == "A" || s == "a") return MorpiMode::AccelY;
    if (s == "G" || s == "g") return MorpiMode::GyroZ;
    throw DataError("unknown MoRPI mode '" + s + "' (expected A or G)");
}

double weinberg_distance(const std::vector<double>& signal, std::size_t begin,
                         std::size_t end, double g) {
    if (begin >= end || end > signal.size()) {
        throw DataError("weinberg_distance: empty segment");
    }
    if (!(g > 0.0)) throw NumericError("weinberg gain must be > 0");
    const auto [lo, hi] = std::minmax_element(signal.begin() + begin, signal.begin() + end);
    return g * std::pow(*hi - *lo, 0.25);
}

double weinberg_distance(const std::vector<double>& segment, double g) {
    return weinberg_distance(segment, 0, segment.size(), g);
}

WeinbergGain calibrate_gain(const std::vector<GainSegment>& segments, double fs,
                            MorpiMode mode, const PeakDetectConfig& cfg) {
    if (segments.empty()) throw DataError("calibrate_gain requires at least one segment");

    double distance_sum = 0.0;
    double root_range_sum = 0.0;
    int used = 0;
    for (const auto& seg : segments) {
        const std::vector<double> smooth = lowpass_zero_phase(seg.signal, fs,
                                                              cfg.smoothing_cutoff);
        const std::vector<std::size_t> peaks = detect_peaks(seg.signal, fs, cfg);
        if (peaks.size() < 2) continue;
        double seg_sum = 0.0;
        for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
            seg_sum += weinberg_distance(smooth, peaks[k], peaks[k + 1] + 1, 1.0);
        }
        distance_sum += seg.known_distance;
        root_range_sum += seg_sum;
        ++used;
    }
    if (used == 0) throw DataError("calibrate_gain: no segment had >= 2 peaks");
    if (root_range_sum <= 0.0) throw DataError("calibrate_gain: zero total signal range");

    WeinbergGain gain;
    gain.g = distance_sum / root_range_sum;
    gain.mode = mode;
    gain.peaks = cfg;
    gain.segments_used = used;
    return gain;
}

std::vector<double> morpi_channel(const ImuStream& samples, MorpiMode mode) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(mode == MorpiMode::AccelY ? s.f_b.y() : s.w_b.z());
    }
    return out;
}

void save_gain(const std::string& path, const WeinbergGain& gain) {
    nlohmann::json j;
    j["mode"] = morpi_mode_name(gain.mode);
    j["G"] = gain.g;
    j["segments_used"] = gain.segments_used;
    j["min_separation_s"] = gain.peaks.min_separation;
    j["min_prominence"] = gain.peaks.min_prominence;
    j["smoothing_cutoff_hz"] = gain.peaks.smoothing_cutoff;
    j["range_signal"] = "smoothed";
    write_file(path, j.dump(2) + "\n");
}

WeinbergGain load_gain(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError(path + ": invalid gain record JSON");
    WeinbergGain gain;
    gain.mode = morpi_mode_from_name(j.at("mode").get<std::string>());
    gain.g = j.at("G").get<double>();
    gain.segments_used = j.at("segments_used").get<int>();
    gain.peaks.min_separation = j.at("min_separation_s").get<double>();
    gain.peaks.min_prominence = j.at("min_prominence").get<double>();
    gain.peaks.smoothing_cutoff = j.at("smoothing_cutoff_hz").get<double>();
    if (!(gain.g > 0.0)) throw DataError(path + ": gain must be > 0");
    return gain;
}

Trajectory2D morpi_reconstruct(const ImuStream& samples, const WeinbergGain& gain,
                               const std::vector<double>& heading, const Pose2D& init) {
    if (heading.size() != samples.size()) {
        throw DataError("morpi_reconstruct: heading series not aligned with samples");
    }
    validate_stream(samples);

    const double dt_med = samples.size() > 1
        ? (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1)
        : 1.0 / 120.0;
    const double fs = 1.0 / dt_med;

    const std::vector<double> raw = morpi_channel(samples, gain.mode);
    const std::vector<double> smooth = lowpass_zero_phase(raw, fs,
                                                          gain.peaks.smoothing_cutoff);
    const std::vector<std::size_t> peaks = detect_peaks(raw, fs, gain.peaks);
    if (peaks.size() < 2) {
        throw DataError("morpi_reconstruct: fewer than 2 peaks, no segment to measure");
    }

    Trajectory2D traj;
    Pose2D pose = init;
    traj.push_back(samples[peaks.front()].t, pose);
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        const double s = weinberg_distance(smooth, peaks[k], peaks[k + 1] + 1, gain.g);
        const double psi = heading[peaks[k]];
        pose.x += s * std::cos(psi);
        pose.y += s * std::sin(psi);
        pose.psi = wrap_angle(psi);
        traj.push_back(samples[peaks[k + 1]].t, pose);
    }
    return traj;
}

}  // namespace morpinet
