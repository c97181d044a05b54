#include "morpinet/strapdown.hpp"

#include <cmath>

#include "morpinet/errors.hpp"
#include "morpinet/quaternion.hpp"

namespace morpinet {

double InsState::yaw() const {
    return std::atan2(r_bl(1, 0), r_bl(0, 0));
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& theta) {
    const double angle = theta.norm();
    if (angle < 1e-12) {
        // Second-order small-angle expansion.
        Eigen::Matrix3d k;
        k << 0, -theta.z(), theta.y(),
             theta.z(), 0, -theta.x(),
             -theta.y(), theta.x(), 0;
        return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
    }
    const Eigen::Vector3d u = theta / angle;
    Eigen::Matrix3d k;
    k << 0, -u.z(), u.y(),
         u.z(), 0, -u.x(),
         -u.y(), u.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
           (1.0 - std::cos(angle)) * k * k;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
    Eigen::Vector3d c0 = r.col(0).normalized();
    Eigen::Vector3d c1 = (r.col(1) - c0 * c0.dot(r.col(1))).normalized();
    Eigen::Vector3d c2 = c0.cross(c1);
    Eigen::Matrix3d out;
    out.col(0) = c0;
    out.col(1) = c1;
    out.col(2) = c2;
    return out;
}

static void check_step_input(const ImuSample& m, double dt) {
    if (!(dt > 0.0)) throw NumericError("ins step requires dt > 0");
    if (!m.finite()) throw NumericError("ins step rejects non-finite IMU sample");
}

InsState ins_step_3d(const InsState& s, const ImuSample& m, double dt,
                     const LocalFrameConfig& cfg) {
    check_step_input(m, dt);

    const Eigen::Vector3d dtheta = m.w_b * dt;
    const Eigen::Matrix3d r_half = s.r_bl * rodrigues(0.5 * dtheta);
    const Eigen::Matrix3d r_end = orthonormalize(s.r_bl * rodrigues(dtheta));

    const Eigen::Vector3d a_l = r_half * m.f_b + cfg.gravity_l();

    InsState out;
    out.r_bl = r_end;
    out.v_l = s.v_l + a_l * dt;
    out.p_l = s.p_l + 0.5 * (s.v_l + out.v_l) * dt;
    return out;
}

Ins2DState ins_step_2d(const Ins2DState& s, const ImuSample& m, double dt) {
    check_step_input(m, dt);

    const double psi_half = s.psi + 0.5 * m.w_b.z() * dt;
    const double c = std::cos(psi_half), sn = std::sin(psi_half);
    const double ax = c * m.f_b.x() - sn * m.f_b.y();
    const double ay = sn * m.f_b.x() + c * m.f_b.y();

    Ins2DState out;
    out.psi = wrap_angle(s.psi + m.w_b.z() * dt);
    out.vx = s.vx + ax * dt;
    out.vy = s.vy + ay * dt;
    out.x = s.x + 0.5 * (s.vx + out.vx) * dt;
    out.y = s.y + 0.5 * (s.vy + out.vy) * dt;
    return out;
}

InsRun ins_propagate(const ImuStream& samples, const InsState& init, InsMode mode,
                     const LocalFrameConfig& cfg,
                     const std::optional<CalibrationRecord>& calib) {
    if (samples.size() < 2) throw DataError("ins_propagate requires at least 2 samples");
    validate_stream(samples);

    const Eigen::Vector3d ab = calib ? calib->accel_bias : Eigen::Vector3d::Zero();
    const Eigen::Vector3d gb = calib ? calib->gyro_bias : Eigen::Vector3d::Zero();

    InsRun run;
    run.traj.points.reserve(samples.size());

    if (mode == InsMode::Mode3D) {
        InsState s = init;
        run.traj.push_back(samples.front().t, {s.p_l.x(), s.p_l.y(), wrap_angle(s.yaw())});
        run.altitude.push_back(s.p_l.z());
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            const double dt = samples[i + 1].t - samples[i].t;
            ImuSample mid;
            mid.t = samples[i].t;
            mid.f_b = 0.5 * (samples[i].f_b + samples[i + 1].f_b) - ab;
            mid.w_b = 0.5 * (samples[i].w_b + samples[i + 1].w_b) - gb;
            s = ins_step_3d(s, mid, dt, cfg);
            run.traj.push_back(samples[i + 1].t, {s.p_l.x(), s.p_l.y(), wrap_angle(s.yaw())});
            run.altitude.push_back(s.p_l.z());
        }
    } else {
        Ins2DState s;
        s.x = init.p_l.x();
        s.y = init.p_l.y();
        s.vx = init.v_l.x();
        s.vy = init.v_l.y();
        s.psi = wrap_angle(init.yaw());
        run.traj.push_back(samples.front().t, {s.x, s.y, s.psi});
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            const double dt = samples[i + 1].t - samples[i].t;
            ImuSample mid;
            mid.t = samples[i].t;
            mid.f_b = 0.5 * (samples[i].f_b + samples[i + 1].f_b) - ab;
            mid.w_b = 0.5 * (samples[i].w_b + samples[i + 1].w_b) - gb;
            s = ins_step_2d(s, mid, dt);
            run.traj.push_back(samples[i + 1].t, {s.x, s.y, s.psi});
        }
    }
    return run;
}

}  // namespace morpinet
