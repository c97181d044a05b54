#pragma once

#include <optional>
#include <string>

#include "morpinet/ahrs.hpp"
#include "morpinet/dnet.hpp"
#include "morpinet/morpi.hpp"
#include "morpinet/strapdown.hpp"
#include "morpinet/types.hpp"

namespace morpinet {

struct MorpinetRunConfig {
    int window = kWindowLen;
    int hop = kWindowLen;  // non-overlapping at inference: fs/24 output rate
    MadgwickConfig ahrs;
    // Heading runs on bias-subtracted samples when present; the distance network
    // always sees raw windows.
    std::optional<CalibrationRecord> calib;
};

struct MorpinetRun {
    Trajectory2D traj;
    std::vector<double> distances;  // clamped per-window distances, m
    int clamped = 0;                // negative network outputs forced to zero
};

/// Windowed dead reckoning: per window the regressed distance and the circular mean
/// of the Madgwick yaw over the same samples advance the pose. One pose per window
/// plus the initial pose. Negative distances clamp to zero (counted).
MorpinetRun morpinet_reconstruct(const ImuStream& samples, const DnetWeights& weights,
                                 const Pose2D& init, const MorpinetRunConfig& cfg);

enum class Method { Ins2D, Ins3D, MorpiA, MorpiG, Morpinet };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

/// Everything a method run may need; missing pieces raise named errors.
struct MethodArtifacts {
    std::optional<WeinbergGain> gain;          // morpi-a / morpi-g
    std::optional<DnetWeights> weights;        // morpinet
    std::optional<CalibrationRecord> calib;    // bias subtraction where applicable
    MadgwickConfig ahrs;
    Pose2D init;
    bool gyro_only_heading = false;            // morpi heading source switch
};

/// Uniform dispatch: runs one method over one stream and returns its trajectory.
Trajectory2D run_method(Method method, const ImuStream& samples,
                        const MethodArtifacts& artifacts);

}  // namespace morpinet
