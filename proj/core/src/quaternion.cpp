#include "morpinet/quaternion.hpp"

#include <cmath>

#include "morpinet/errors.hpp"

namespace morpinet {

double wrap_angle(double a) {
    // Result in (-pi, pi]; differs from a by a multiple of 2*pi.
    double w = std::remainder(a, 2.0 * M_PI);
    if (w <= -M_PI) w += 2.0 * M_PI;
    return w;
}

Quaternion Quaternion::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) return identity();
    const Eigen::Vector3d u = axis / n;
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return {std::cos(h), u.x() * s, u.y() * s, u.z() * s};
}

Quaternion Quaternion::from_euler_zyx(double yaw, double pitch, double roll) {
    const Quaternion qz = from_axis_angle(Eigen::Vector3d::UnitZ(), yaw);
    const Quaternion qy = from_axis_angle(Eigen::Vector3d::UnitY(), pitch);
    const Quaternion qx = from_axis_angle(Eigen::Vector3d::UnitX(), roll);
    return quat_multiply(quat_multiply(qz, qy), qx);
}

double Quaternion::norm() const {
    return std::sqrt(q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4);
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n == 0.0) throw NumericError("cannot normalize zero quaternion");
    return {q1 / n, q2 / n, q3 / n, q4 / n};
}

bool Quaternion::finite() const {
    return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(q3) && std::isfinite(q4);
}

Eigen::Matrix3d Quaternion::to_rotation_matrix() const {
    const double w = q1, x = q2, y = q3, z = q4;
    Eigen::Matrix3d r;
    r << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
    return r;
}

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
    return {a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3 - a.q4 * b.q4,
            a.q1 * b.q2 + a.q2 * b.q1 + a.q3 * b.q4 - a.q4 * b.q3,
            a.q1 * b.q3 - a.q2 * b.q4 + a.q3 * b.q1 + a.q4 * b.q2,
            a.q1 * b.q4 + a.q2 * b.q3 - a.q3 * b.q2 + a.q4 * b.q1};
}

Quaternion quat_conjugate(const Quaternion& q) {
    return q.conjugate();
}

double quat_to_yaw(const Quaternion& q) {
    if (std::abs(q.norm() - 1.0) > 1e-9) {
        throw NumericError("quat_to_yaw requires a unit quaternion");
    }
    return std::atan2(2.0 * (q.q2 * q.q3 + q.q1 * q.q4),
                      q.q1 * q.q1 + q.q2 * q.q2 - q.q3 * q.q3 - q.q4 * q.q4);
}

Eigen::Vector3d quat_rotate(const Quaternion& q, const Eigen::Vector3d& v) {
    const Quaternion p{0.0, v.x(), v.y(), v.z()};
    const Quaternion r = quat_multiply(quat_multiply(q, p), q.conjugate());
    return {r.q2, r.q3, r.q4};
}

}  // namespace morpinet
