#include "morpinet/ahrs.hpp"

#include <cmath>

#include "morpinet/errors.hpp"

namespace morpinet {

void MadgwickConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw NumericError("madgwick gamma must be in [0,1]");
    if (!(mu > 0.0)) throw NumericError("madgwick mu must be > 0");
    if (!(dt > 0.0)) throw NumericError("madgwick dt must be > 0");
}

Quaternion gyro_quat_step(const Quaternion& q_prev, const Eigen::Vector3d& w, double dt) {
    if (!w.allFinite() || !q_prev.finite()) {
        throw NumericError("gyro_quat_step rejects non-finite input");
    }
    const Quaternion wq{0.0, w.x(), w.y(), w.z()};
    const Quaternion qdot = quat_multiply(q_prev, wq);
    const Quaternion q{q_prev.q1 + 0.5 * qdot.q1 * dt,
                       q_prev.q2 + 0.5 * qdot.q2 * dt,
                       q_prev.q3 + 0.5 * qdot.q3 * dt,
                       q_prev.q4 + 0.5 * qdot.q4 * dt};
    return q.normalized();
}

Eigen::Vector3d gravity_objective(const Quaternion& q, const Eigen::Vector3d& g_b) {
    // Vector part of q* x (0,0,0,1) x q, written out. Full quadratic form so the
    // Jacobian below is exact for any norm.
    const double w = q.q1, x = q.q2, y = q.q3, z = q.q4;
    Eigen::Vector3d rotated;
    rotated.x() = 2.0 * (x * z - w * y);
    rotated.y() = 2.0 * (y * z + w * x);
    rotated.z() = w * w - x * x - y * y + z * z;
    return rotated - g_b;
}

Eigen::Matrix<double, 3, 4> gravity_objective_jacobian(const Quaternion& q) {
    const double w = q.q1, x = q.q2, y = q.q3, z = q.q4;
    Eigen::Matrix<double, 3, 4> j;
    j << -2 * y,  2 * z, -2 * w, 2 * x,
          2 * x,  2 * w,  2 * z, 2 * y,
          2 * w, -2 * x, -2 * y, 2 * z;
    return j;
}

static Eigen::Vector3d gravity_direction(const Eigen::Vector3d& f_b, AccelNorm mode) {
    // The accelerometer of a quasi-static body measures -g in the body frame,
    // so the gravity direction estimate is the negated, normalized reading.
    const double n = (mode == AccelNorm::L2) ? f_b.norm() : f_b.lpNorm<1>();
    if (n == 0.0) throw NumericError("cannot normalize zero accelerometer reading");
    return -f_b / n;
}

Quaternion gradient_correction_step(const Quaternion& q_prev, const Eigen::Vector3d& f_b,
                                    const MadgwickConfig& cfg) {
    const Eigen::Vector3d g_b = gravity_direction(f_b, cfg.accel_norm);
    const Eigen::Vector3d res = gravity_objective(q_prev, g_b);
    const Eigen::Vector4d grad = gravity_objective_jacobian(q_prev).transpose() * res;
    const double gn = grad.norm();
    if (gn == 0.0) return q_prev;  // objective already minimized
    const Eigen::Vector4d step = cfg.mu * grad / gn;
    return {q_prev.q1 - step(0), q_prev.q2 - step(1), q_prev.q3 - step(2),
            q_prev.q4 - step(3)};
}

Quaternion madgwick_update(const Quaternion& q_prev, const ImuSample& m,
                           const MadgwickConfig& cfg) {
    if (cfg.gamma == 0.0) return gyro_quat_step(q_prev, m.w_b, cfg.dt);

    const Quaternion q_w = gyro_quat_step(q_prev, m.w_b, cfg.dt);
    const Quaternion q_g = gradient_correction_step(q_prev, m.f_b, cfg);
    if (cfg.gamma == 1.0) return q_g.normalized();

    const double g = cfg.gamma;
    const Quaternion fused{g * q_g.q1 + (1.0 - g) * q_w.q1,
                           g * q_g.q2 + (1.0 - g) * q_w.q2,
                           g * q_g.q3 + (1.0 - g) * q_w.q3,
                           g * q_g.q4 + (1.0 - g) * q_w.q4};
    return fused.normalized();
}

AhrsRun heading_series(const ImuStream& samples, const Quaternion& q0,
                       const MadgwickConfig& cfg) {
    if (samples.empty()) throw DataError("heading_series requires a nonempty stream");
    cfg.validate();

    AhrsRun run;
    run.q0 = q0;
    run.quaternions.reserve(samples.size());
    run.yaw.reserve(samples.size());

    Quaternion q = q0;
    MadgwickConfig step_cfg = cfg;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        step_cfg.dt = (i == 0) ? cfg.dt : samples[i].t - samples[i - 1].t;
        q = madgwick_update(q, samples[i], step_cfg);
        run.quaternions.push_back(q);
        run.yaw.push_back(quat_to_yaw(q));
    }
    return run;
}

double mean_heading(const std::vector<double>& yaws, std::size_t begin, std::size_t count) {
    if (count == 0 || begin + count > yaws.size()) {
        throw DataError("mean_heading: empty or out-of-range window");
    }
    double s = 0.0, c = 0.0;
    for (std::size_t i = begin; i < begin + count; ++i) {
        s += std::sin(yaws[i]);
        c += std::cos(yaws[i]);
    }
    return std::atan2(s / static_cast<double>(count), c / static_cast<double>(count));
}

double mean_heading(const std::vector<double>& yaws) {
    return mean_heading(yaws, 0, yaws.size());
}

Quaternion initial_orientation(const Eigen::Vector3d& accel_mean, double yaw0) {
    const double n = accel_mean.norm();
    if (n == 0.0) throw NumericError("initial_orientation: zero accelerometer mean");
    const Eigen::Vector3d u = -accel_mean / n;  // gravity direction in body frame
    const double pitch = std::asin(std::clamp(-u.x(), -1.0, 1.0));
    const double roll = std::atan2(u.y(), u.z());
    return Quaternion::from_euler_zyx(yaw0, pitch, roll);
}

}  // namespace morpinet
