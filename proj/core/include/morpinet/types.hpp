#pragma once

#include <vector>

#include <Eigen/Core>

namespace morpinet {

/// One timestamped 6-axis IMU reading: specific force [m/s^2] and angular rate [rad/s],
/// both in the body frame.
struct ImuSample {
    double t = 0.0;                              // s
    Eigen::Vector3d f_b = Eigen::Vector3d::Zero();
    Eigen::Vector3d w_b = Eigen::Vector3d::Zero();

    bool finite() const;
};

using ImuStream = std::vector<ImuSample>;

/// Throws NumericError on non-finite components, DataError on non-increasing timestamps.
void validate_stream(const ImuStream& samples);

/// Planar pose in the local NED frame: x north [m], y east [m], heading psi [rad]
/// measured from north toward east, wrapped to (-pi, pi].
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

struct TimedPose2D {
    double t = 0.0;
    Pose2D pose;
};

/// Timestamped planar trajectory; timestamps strictly increasing.
struct Trajectory2D {
    std::vector<TimedPose2D> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    void push_back(double t, const Pose2D& p) { points.push_back({t, p}); }
    void validate() const;  // throws DataError on non-increasing timestamps
};

/// Ground-truth fix in local planar coordinates.
struct RtkFix {
    double t = 0.0;
    double e = 0.0;  // m east
    double n = 0.0;  // m north
};

using RtkStream = std::vector<RtkFix>;

/// Fixed local NED frame; gravity points along +z (down).
struct LocalFrameConfig {
    double gravity_magnitude = 9.80665;  // m/s^2

    Eigen::Vector3d gravity_l() const { return {0.0, 0.0, gravity_magnitude}; }
};

/// Stationary-period IMU biases.
struct CalibrationRecord {
    Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();  // m/s^2
    Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();   // rad/s
    double t_start = 0.0;
    double t_end = 0.0;
};

}  // namespace morpinet
