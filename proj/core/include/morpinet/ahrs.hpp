#pragma once

#include <vector>

#include <Eigen/Core>

#include "morpinet/quaternion.hpp"
#include "morpinet/types.hpp"

namespace morpinet {

enum class AccelNorm { L2, L1 };

struct MadgwickConfig {
    double gamma = 0.01;  // fusion weight in [0,1]
    double mu = 0.01;     // gradient step size
    double dt = 1.0 / 120.0;
    AccelNorm accel_norm = AccelNorm::L2;

    void validate() const;
};

/// Quaternion integration of the angular rate:
/// q_w = q_prev + 0.5 * (q_prev x (0, w)) * dt, then normalized.
Quaternion gyro_quat_step(const Quaternion& q_prev, const Eigen::Vector3d& w, double dt);

/// Residual of the rotated unit-down gravity minus the measured gravity direction:
/// vector part of q* x (0,0,0,1) x q - g_b. `g_b` must be the normalized gravity
/// direction in the body frame (for a specific-force reading f this is -f/|f|).
Eigen::Vector3d gravity_objective(const Quaternion& q, const Eigen::Vector3d& g_b);

/// Analytic Jacobian of gravity_objective with respect to (q1,q2,q3,q4), 3x4.
Eigen::Matrix<double, 3, 4> gravity_objective_jacobian(const Quaternion& q);

/// One normalized-gradient correction step: q - mu * grad/|grad| with grad = J^T f.
/// Returns q_prev unchanged when the gradient vanishes. Throws NumericError on
/// zero-norm accelerometer input.
Quaternion gradient_correction_step(const Quaternion& q_prev, const Eigen::Vector3d& f_b,
                                    const MadgwickConfig& cfg);

/// Fused update: gamma * q_gradient + (1-gamma) * q_gyro, normalized.
Quaternion madgwick_update(const Quaternion& q_prev, const ImuSample& m,
                           const MadgwickConfig& cfg);

struct AhrsRun {
    Quaternion q0;
    std::vector<Quaternion> quaternions;  // one per sample
    std::vector<double> yaw;              // rad, one per sample
};

/// Runs the filter over a stream from q0, extracting yaw after each update.
/// Per-sample dt comes from the timestamps (cfg.dt for the first sample).
AhrsRun heading_series(const ImuStream& samples, const Quaternion& q0,
                       const MadgwickConfig& cfg);

/// Circular mean of a window of yaw values: atan2(mean sin, mean cos).
double mean_heading(const std::vector<double>& yaws, std::size_t begin, std::size_t count);
double mean_heading(const std::vector<double>& yaws);

/// Initial orientation from the static-period accelerometer mean (roll/pitch) and a
/// known initial heading.
Quaternion initial_orientation(const Eigen::Vector3d& accel_mean, double yaw0);

}  // namespace morpinet
