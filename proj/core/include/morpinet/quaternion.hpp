#pragma once

#include <Eigen/Core>

namespace morpinet {

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// Unit orientation quaternion, scalar-first: q1 is the scalar part.
struct Quaternion {
    double q1 = 1.0;  // scalar
    double q2 = 0.0;  // x
    double q3 = 0.0;  // y
    double q4 = 0.0;  // z

    Quaternion() = default;
    Quaternion(double w, double x, double y, double z) : q1(w), q2(x), q3(y), q4(z) {}

    static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
    static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);
    /// Yaw-pitch-roll (ZYX) composition, angles in rad.
    static Quaternion from_euler_zyx(double yaw, double pitch, double roll);

    double norm() const;
    Quaternion normalized() const;
    Quaternion conjugate() const { return {q1, -q2, -q3, -q4}; }
    bool finite() const;

    Eigen::Matrix3d to_rotation_matrix() const;
    Eigen::Vector4d coeffs() const { return {q1, q2, q3, q4}; }
};

/// Hamilton product a*b.
Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);

Quaternion quat_conjugate(const Quaternion& q);

/// Heading from a unit quaternion: atan2(2(q2 q3 + q1 q4), q1^2 + q2^2 - q3^2 - q4^2).
/// Throws NumericError if the quaternion is not unit-norm within 1e-9.
double quat_to_yaw(const Quaternion& q);

/// Rotate a vector by the quaternion (body -> parent frame for an attitude quaternion).
Eigen::Vector3d quat_rotate(const Quaternion& q, const Eigen::Vector3d& v);

}  // namespace morpinet
