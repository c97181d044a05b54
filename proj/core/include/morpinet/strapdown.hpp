#pragma once

#include <optional>

#include <Eigen/Core>

#include "morpinet/types.hpp"

namespace morpinet {

/// Full 3D strapdown state in the local NED frame.
struct InsState {
    Eigen::Vector3d p_l = Eigen::Vector3d::Zero();   // m
    Eigen::Vector3d v_l = Eigen::Vector3d::Zero();   // m/s
    Eigen::Matrix3d r_bl = Eigen::Matrix3d::Identity();  // body -> l-frame

    /// Heading extracted from the attitude matrix, in (-pi, pi].
    double yaw() const;
};

/// Planar mechanization state (f_z = 0, omega_x = omega_y = 0 assumption).
struct Ins2DState {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double psi = 0.0;
};

/// One 3D mechanization step. `m` carries the average specific force / angular rate
/// over the interval of length dt. Attitude advances by the Rodrigues rotation of
/// w*dt (re-orthonormalized); velocity integrates the mid-interval attitude, position
/// the velocity trapezoid. Throws NumericError on non-finite input or dt <= 0.
InsState ins_step_3d(const InsState& s, const ImuSample& m, double dt,
                     const LocalFrameConfig& cfg);

/// One planar step: psi advances by w_z*dt, the planar specific force is rotated
/// into the l-frame at the mid-interval heading and integrated.
Ins2DState ins_step_2d(const Ins2DState& s, const ImuSample& m, double dt);

enum class InsMode { Mode3D, Mode2D };

struct InsRun {
    Trajectory2D traj;
    std::vector<double> altitude;  // 3D mode only, down-positive; per trajectory point
};

/// Batch driver: integrates an entire stream, emitting one pose per sample
/// (the first pose is the initial state). Consecutive samples are averaged to form
/// the per-interval measurement. Optional calibration biases are subtracted first.
InsRun ins_propagate(const ImuStream& samples, const InsState& init, InsMode mode,
                     const LocalFrameConfig& cfg = {},
                     const std::optional<CalibrationRecord>& calib = std::nullopt);

/// Rodrigues rotation matrix for the rotation vector `theta` (angle*axis).
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& theta);

/// Gram-Schmidt re-orthonormalization of a near-orthonormal matrix.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

}  // namespace morpinet
