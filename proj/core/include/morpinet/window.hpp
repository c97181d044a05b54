#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace morpinet {

inline constexpr int kImuChannels = 6;   // fx fy fz wx wy wz
inline constexpr int kWindowLen = 24;    // samples per window (0.2 s at 120 Hz)
inline constexpr int kWindowFlat = kImuChannels * kWindowLen;

/// One fixed-length IMU slice paired with its ground-truth distance target.
/// Values are raw (uncalibrated) sensor readings, channel-major: x[ch*24 + t].
struct Window {
    std::array<double, kWindowFlat> x{};
    double target = 0.0;     // m traveled over the window span
    double t_start = 0.0;    // s
    int trajectory = 0;      // index into the owning dataset's id table

    double at(int channel, int step) const { return x[channel * kWindowLen + step]; }
    double& at(int channel, int step) { return x[channel * kWindowLen + step]; }
};

/// Windowed dataset with provenance.
struct WindowedDataset {
    std::vector<std::string> trajectory_ids;
    std::vector<Window> windows;
    int hop = 12;                 // IMU samples between successive window starts
    std::size_t skipped = 0;      // windows dropped over RTK gaps
    std::string digest;           // content digest of the window payload
};

}  // namespace morpinet
