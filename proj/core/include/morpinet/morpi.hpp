#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "morpinet/types.hpp"

namespace morpinet {

struct PeakDetectConfig {
    double min_separation = 1.0;      // s between accepted peaks
    double min_prominence = -1.0;     // signal units; < 0 selects 0.5*std of the
                                      // mean-removed smoothed signal
    double smoothing_cutoff = 5.0;    // Hz, zero-phase low-pass; must stay below Nyquist

    void validate(double fs) const;
};

/// Zero-phase 2nd-order Butterworth low-pass (forward-backward, reflected padding).
std::vector<double> lowpass_zero_phase(const std::vector<double>& x, double fs,
                                       double cutoff_hz);

/// Local-maxima indices of the smoothed signal, strictly increasing, honoring
/// prominence and minimum separation. Throws DataError when the series is shorter
/// than the filter warm-up.
std::vector<std::size_t> detect_peaks(const std::vector<double>& signal, double fs,
                                      const PeakDetectConfig& cfg);

enum class MorpiMode { AccelY, GyroZ };

/// Calibrated gain of the peak-to-peak distance model.
struct WeinbergGain {
    double g = 1.0;
    MorpiMode mode = MorpiMode::AccelY;
    // Peak/smoothing settings the gain was calibrated with; inference reuses them.
    PeakDetectConfig peaks;
    int segments_used = 0;
};

std::string morpi_mode_name(MorpiMode m);
MorpiMode morpi_mode_from_name(const std::string& s);

/// Peak-to-peak distance s = G * (max - min)^(1/4) over one segment.
double weinberg_distance(const std::vector<double>& segment, double g);
double weinberg_distance(const std::vector<double>& signal, std::size_t begin,
                         std::size_t end, double g);

struct GainSegment {
    std::vector<double> signal;  // raw channel samples of a straight calibration run
    double known_distance = 0.0; // m traveled over the segment
};

/// Ratio-of-sums fit through the origin: G = sum(d_known) / sum(range^(1/4)) over all
/// peak-to-peak sub-segments. Ranges are taken on the smoothed signal.
WeinbergGain calibrate_gain(const std::vector<GainSegment>& segments, double fs,
                            MorpiMode mode, const PeakDetectConfig& cfg);

/// Peak-indexed dead reckoning: one pose per detected peak, first = init.
/// `heading` must be time-aligned with `samples` (one yaw per sample).
Trajectory2D morpi_reconstruct(const ImuStream& samples, const WeinbergGain& gain,
                               const std::vector<double>& heading, const Pose2D& init);

/// The scalar channel a MoRPI mode consumes (accelerometer y or gyroscope z).
std::vector<double> morpi_channel(const ImuStream& samples, MorpiMode mode);

/// Gain record JSON: {mode, G, segments_used, peak settings}. Calibration and
/// inference share the smoothing configuration through this record.
void save_gain(const std::string& path, const WeinbergGain& gain);
WeinbergGain load_gain(const std::string& path);

}  // namespace morpinet
