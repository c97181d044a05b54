#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "morpinet/ahrs.hpp"
#include "morpinet/errors.hpp"
#include "morpinet/simgen.hpp"

using namespace morpinet;

namespace {

Quaternion random_unit_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Quaternion q{g(rng), g(rng), g(rng), g(rng)};
    return q.normalized();
}

double objective_norm(const Quaternion& q, const Eigen::Vector3d& g_b) {
    return gravity_objective(q, g_b).norm();
}

}  // namespace

TEST_CASE("gyro step: zero rate leaves the quaternion") {
    const Quaternion q{0.4, 0.2, -0.3, 0.6};
    const Quaternion out = gyro_quat_step(q.normalized(), Eigen::Vector3d::Zero(), 1e-2);
    const Quaternion ref = q.normalized();
    CHECK(out.q1 == doctest::Approx(ref.q1).epsilon(1e-15));
    CHECK(out.q4 == doctest::Approx(ref.q4).epsilon(1e-15));
}

TEST_CASE("gyro step: constant z rate integrates to the expected yaw") {
    Quaternion q = Quaternion::identity();
    const Eigen::Vector3d w{0.0, 0.0, M_PI / 2.0};
    for (int i = 0; i < 120; ++i) q = gyro_quat_step(q, w, 1.0 / 120.0);
    CHECK(quat_to_yaw(q) == doctest::Approx(M_PI / 2.0).epsilon(1e-4));
}

TEST_CASE("gyro step matches the closed-form axis-angle rotation") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector3d w{g(rng), g(rng), g(rng)};
        Quaternion q = Quaternion::identity();
        const double dt = 1.0 / 120.0;
        const int steps = 240;  // 2 s
        for (int i = 0; i < steps; ++i) q = gyro_quat_step(q, w, dt);
        const Quaternion ref =
            Quaternion::from_axis_angle(w.normalized(), w.norm() * steps * dt);
        const double sign = (ref.q1 * q.q1 + ref.q2 * q.q2 + ref.q3 * q.q3 +
                             ref.q4 * q.q4) < 0 ? -1.0 : 1.0;
        CHECK(std::abs(sign * q.q1 - ref.q1) < 1e-3);
        CHECK(std::abs(sign * q.q2 - ref.q2) < 1e-3);
        CHECK(std::abs(sign * q.q3 - ref.q3) < 1e-3);
        CHECK(std::abs(sign * q.q4 - ref.q4) < 1e-3);
    }
}

TEST_CASE("gravity objective: aligned cases vanish") {
    CHECK(gravity_objective(Quaternion::identity(), {0, 0, 1}).norm() == 0.0);
    const Quaternion flip = Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), M_PI);
    CHECK(gravity_objective(flip, {0, 0, -1}).norm() < 1e-15);
}

TEST_CASE("gravity objective equals the rotation-matrix residual") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Quaternion q = random_unit_quat(rng);
        Eigen::Vector3d dir{g(rng), g(rng), g(rng)};
        dir.normalize();
        const Eigen::Vector3d res = gravity_objective(q, dir);
        const Eigen::Vector3d oracle =
            q.to_rotation_matrix().transpose() * Eigen::Vector3d(0, 0, 1) - dir;
        CHECK((res - oracle).norm() < 1e-12);
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    // Gradient of 0.5*|f(q)|^2 is J^T f; check against a scalar finite difference.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-6;
    for (int k = 0; k < 100; ++k) {
        const Quaternion q = random_unit_quat(rng);
        Eigen::Vector3d dir{g(rng), g(rng), g(rng)};
        dir.normalize();

        const Eigen::Vector3d f = gravity_objective(q, dir);
        const Eigen::Vector4d analytic = gravity_objective_jacobian(q).transpose() * f;

        Eigen::Vector4d fd;
        for (int i = 0; i < 4; ++i) {
            Eigen::Vector4d c = q.coeffs();
            c(i) += h;
            const double up =
                0.5 * gravity_objective({c(0), c(1), c(2), c(3)}, dir).squaredNorm();
            c(i) -= 2 * h;
            const double dn =
                0.5 * gravity_objective({c(0), c(1), c(2), c(3)}, dir).squaredNorm();
            fd(i) = (up - dn) / (2 * h);
        }
        CHECK((analytic - fd).norm() / std::max(fd.norm(), 1e-12) <= 1e-6);
    }
}

TEST_CASE("gradient step: zero residual leaves the quaternion") {
    MadgwickConfig cfg;
    const Quaternion q = Quaternion::identity();
    const Quaternion out = gradient_correction_step(q, {0, 0, -9.80665}, cfg);
    CHECK(out.q1 == q.q1);
    CHECK(out.q2 == q.q2);
}

TEST_CASE("gradient steps descend to convergence") {
    // Fixed-length normalized-gradient steps stall at the step size, so the descent
    // oracle shrinks mu with the residual.
    MadgwickConfig cfg;
    Quaternion q = quat_multiply(
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), 0.15),
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitY(), -0.08));
    const Eigen::Vector3d f_b{0.0, 0.0, -9.80665};
    const Eigen::Vector3d g_b = -f_b.normalized();

    double prev = objective_norm(q, g_b);
    int iters = 0;
    while (prev > 1e-6 && iters < 20000) {
        cfg.mu = std::min(0.01, 0.25 * prev);
        q = gradient_correction_step(q, f_b, cfg);
        const double cur = objective_norm(q, g_b);
        CHECK(cur < prev);
        prev = cur;
        ++iters;
    }
    CHECK(prev <= 1e-6);
}

TEST_CASE("a small-mu gradient step never increases the objective") {
    std::mt19937_64 rng(11);
    MadgwickConfig cfg;
    cfg.mu = 1e-4;
    for (int k = 0; k < 100; ++k) {
        // Small random tilt away from level.
        std::normal_distribution<double> g(0.0, 0.1);
        const Quaternion q = quat_multiply(
            Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), g(rng)),
            Quaternion::from_axis_angle(Eigen::Vector3d::UnitY(), g(rng)));
        const Eigen::Vector3d f_b{0.0, 0.0, -9.80665};
        const Eigen::Vector3d g_b = -f_b.normalized();
        const double before = objective_norm(q, g_b);
        if (before < 10 * cfg.mu) continue;  // inside the stall region
        const Quaternion out = gradient_correction_step(q, f_b, cfg);
        CHECK(objective_norm(out, g_b) <= before);
    }
}

TEST_CASE("madgwick update: gamma 0 equals the pure gyro step") {
    MadgwickConfig cfg;
    cfg.gamma = 0.0;
    std::mt19937_64 rng(13);
    for (int k = 0; k < 50; ++k) {
        const Quaternion q = random_unit_quat(rng);
        ImuSample m;
        m.f_b = {0.1, -0.2, -9.7};
        m.w_b = {0.5, -0.4, 0.3};
        const Quaternion a = madgwick_update(q, m, cfg);
        const Quaternion b = gyro_quat_step(q, m.w_b, cfg.dt);
        CHECK(a.q1 == b.q1);
        CHECK(a.q2 == b.q2);
        CHECK(a.q3 == b.q3);
        CHECK(a.q4 == b.q4);
    }
}

TEST_CASE("madgwick update: gamma 1 on static data converges to the true tilt") {
    MadgwickConfig cfg;
    cfg.gamma = 1.0;
    cfg.mu = 0.01;

    // True attitude: 5 degrees roll. Stationary accelerometer: f = -R^T g.
    const double roll = 5.0 * M_PI / 180.0;
    const Quaternion q_true = Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), roll);
    const Eigen::Vector3d f_b =
        -(q_true.to_rotation_matrix().transpose() * Eigen::Vector3d(0, 0, 9.80665));

    ImuSample m;
    m.f_b = f_b;
    Quaternion q = Quaternion::identity();
    for (int i = 0; i < 5000; ++i) q = madgwick_update(q, m, cfg);
    const Eigen::Vector3d g_b = -f_b.normalized();
    CHECK(objective_norm(q, g_b) < 0.02);  // residual at the mu-scale stall
}

TEST_CASE("madgwick yaw tracks the simulator heading within 2 degrees RMS") {
    SerpentineSpec spec;
    spec.speed = 1.0;
    spec.amplitude = 0.5;
    spec.frequency = 0.5;
    spec.duration = 30.0;
    const GeneratedPath path = gen_path(spec);
    const ImuStream imu = path_to_imu(path.dense);

    MadgwickConfig cfg;
    cfg.gamma = 0.01;
    const Quaternion q0 =
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), path.dense.front().psi);
    const AhrsRun run = heading_series(imu, q0, cfg);

    double sq = 0.0;
    for (std::size_t i = 0; i < run.yaw.size(); ++i) {
        const double e = std::remainder(run.yaw[i] - path.dense[i].psi, 2.0 * M_PI);
        sq += e * e;
    }
    const double rms_deg =
        std::sqrt(sq / static_cast<double>(run.yaw.size())) * 180.0 / M_PI;
    CHECK(rms_deg < 2.0);
}

TEST_CASE("every stored quaternion is unit norm") {
    SerpentineSpec spec;
    spec.duration = 5.0;
    const ImuStream imu = path_to_imu(gen_path(spec).dense);
    MadgwickConfig cfg;
    cfg.gamma = 0.05;
    const AhrsRun run = heading_series(imu, Quaternion::identity(), cfg);
    for (const auto& q : run.quaternions) {
        CHECK(std::abs(q.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("static gravity-only input keeps yaw fixed") {
    MadgwickConfig cfg;
    cfg.gamma = 0.05;
    ImuSample m;
    m.f_b = {0.0, 0.0, -9.80665};
    Quaternion q = Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.8);
    double yaw = quat_to_yaw(q);
    for (int i = 0; i < 2000; ++i) {
        q = madgwick_update(q, m, cfg);
        const double y = quat_to_yaw(q);
        CHECK(std::abs(std::remainder(y - yaw, 2.0 * M_PI)) < 1e-9);
        yaw = y;
    }
}

TEST_CASE("mean_heading") {
    CHECK(mean_heading({0.3, 0.3, 0.3}) == doctest::Approx(0.3));
    const double m = mean_heading({M_PI - 0.01, -M_PI + 0.01});
    CHECK(std::abs(std::abs(m) - M_PI) < 1e-9);  // pi, not 0
    CHECK_THROWS_AS(mean_heading({}), DataError);

    // Window from a clean run matches the ground-truth mean course within 0.5 deg.
    SerpentineSpec spec;
    spec.duration = 5.0;
    const GeneratedPath path = gen_path(spec);
    const ImuStream imu = path_to_imu(path.dense);
    MadgwickConfig cfg;
    cfg.gamma = 0.01;
    const Quaternion q0 =
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), path.dense.front().psi);
    const AhrsRun run = heading_series(imu, q0, cfg);
    const double got = mean_heading(run.yaw, 120, 24);
    double s = 0.0, c = 0.0;
    for (std::size_t i = 120; i < 144; ++i) {
        s += std::sin(path.dense[i].psi);
        c += std::cos(path.dense[i].psi);
    }
    const double want = std::atan2(s / 24.0, c / 24.0);
    CHECK(std::abs(std::remainder(got - want, 2.0 * M_PI)) < 0.5 * M_PI / 180.0);
}

TEST_CASE("initial orientation recovers tilt from the accelerometer mean") {
    const double roll = 0.1, pitch = -0.07, yaw = 1.2;
    const Quaternion q_true = Quaternion::from_euler_zyx(yaw, pitch, roll);
    const Eigen::Vector3d f_mean =
        -(q_true.to_rotation_matrix().transpose() * Eigen::Vector3d(0, 0, 9.80665));
    const Quaternion q0 = initial_orientation(f_mean, yaw);
    CHECK(std::abs(q0.q1 - q_true.q1) < 1e-9);
    CHECK(std::abs(q0.q2 - q_true.q2) < 1e-9);
    CHECK(std::abs(q0.q3 - q_true.q3) < 1e-9);
    CHECK(std::abs(q0.q4 - q_true.q4) < 1e-9);
}

TEST_CASE("error paths") {
    MadgwickConfig cfg;
    CHECK_THROWS_AS(gradient_correction_step(Quaternion::identity(),
                                             Eigen::Vector3d::Zero(), cfg),
                    NumericError);
    CHECK_THROWS_AS(heading_series({}, Quaternion::identity(), cfg), DataError);
    cfg.gamma = 1.5;
    ImuStream one(1);
    one[0].f_b = {0, 0, -9.8};
    CHECK_THROWS_AS(heading_series(one, Quaternion::identity(), cfg), NumericError);
}
