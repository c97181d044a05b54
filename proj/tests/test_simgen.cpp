#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "morpinet/dataset.hpp"
#include "morpinet/simgen.hpp"

using namespace morpinet;

namespace {

// Independent quadrature oracle: polyline length at refined sampling with one
// Richardson step (the polyline error is O(h^2)).
double richardson_path_length(SerpentineSpec spec) {
    auto polyline = [&](double fs) {
        SerpentineSpec s = spec;
        s.fs_imu = fs;
        const GeneratedPath p = gen_path(s);
        double len = 0.0;
        for (std::size_t i = 1; i < p.dense.size(); ++i) {
            len += (p.dense[i].pos - p.dense[i - 1].pos).norm();
        }
        return len;
    };
    const double l1 = polyline(480.0);
    const double l2 = polyline(960.0);
    return l2 + (l2 - l1) / 3.0;
}

}  // namespace

TEST_CASE("zero amplitude gives a straight line of exact length") {
    SerpentineSpec spec;
    spec.amplitude = 0.0;
    spec.heading = 0.7;
    spec.speed = 1.3;
    spec.duration = 10.0;
    const GeneratedPath p = gen_path(spec);

    double len = 0.0;
    for (std::size_t i = 1; i < p.dense.size(); ++i) {
        len += (p.dense[i].pos - p.dense[i - 1].pos).norm();
    }
    CHECK(len == doctest::Approx(spec.speed * spec.duration).epsilon(1e-12));
    // Heading is constant along a straight line.
    for (const auto& d : p.dense) CHECK(d.psi == doctest::Approx(0.7));
}

TEST_CASE("arc length matches the quadrature oracle") {
    SerpentineSpec spec;
    spec.speed = 1.0;
    spec.amplitude = 0.5;
    spec.frequency = 0.5;
    spec.duration = 10.0;
    const double oracle = richardson_path_length(spec);
    CHECK(serpentine_arc_length(spec) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("RTK pair distances sum close to the arc length") {
    SerpentineSpec spec;
    spec.speed = 1.0;
    spec.amplitude = 0.4;
    spec.frequency = 0.4;
    spec.duration = 20.0;
    const GeneratedPath p = gen_path(spec);
    double sum = 0.0;
    for (std::size_t i = 1; i < p.rtk.size(); ++i) {
        sum += gt_distance(p.rtk[i - 1], p.rtk[i]);
    }
    const double arc = serpentine_arc_length(spec);
    // Chords under-measure the arc; 10 Hz fixes keep the gap far below 1%.
    CHECK(sum <= arc);
    CHECK(sum > 0.99 * arc);
}

TEST_CASE("straight constant-velocity path maps to gravity-only IMU") {
    SerpentineSpec spec;
    spec.amplitude = 0.0;
    spec.heading = -1.1;
    const GeneratedPath p = gen_path(spec);
    const ImuStream imu = path_to_imu(p.dense);
    for (const auto& m : imu) {
        CHECK(std::abs(m.f_b.x()) < 1e-12);
        CHECK(std::abs(m.f_b.y()) < 1e-12);
        CHECK(m.f_b.z() == doctest::Approx(-9.80665));
        CHECK(m.w_b.norm() < 1e-12);
    }
}

TEST_CASE("gyro z matches the analytic heading rate") {
    SerpentineSpec spec;
    spec.amplitude = 0.6;
    spec.frequency = 0.5;
    const GeneratedPath p = gen_path(spec);
    const ImuStream imu = path_to_imu(p.dense);
    REQUIRE(imu.size() == p.dense.size());
    for (std::size_t i = 0; i < imu.size(); ++i) {
        CHECK(imu[i].w_b.z() == doctest::Approx(p.dense[i].psi_dot).epsilon(1e-9));
    }
    // The analytic rate agrees with a central difference of the heading series.
    const double dt = 1.0 / spec.fs_imu;
    for (std::size_t i = 1; i + 1 < p.dense.size(); i += 37) {
        const double fd =
            std::remainder(p.dense[i + 1].psi - p.dense[i - 1].psi, 2.0 * M_PI) /
            (2.0 * dt);
        CHECK(p.dense[i].psi_dot == doctest::Approx(fd).epsilon(5e-4));
    }
}

TEST_CASE("corrupt: zero error spec is the identity") {
    SerpentineSpec spec;
    spec.duration = 2.0;
    const ImuStream clean = path_to_imu(gen_path(spec).dense);
    SensorErrorSpec err;
    err.gyro_bias_deg_h = 0.0;
    err.gyro_noise_deg_s_sqrt_hz = 0.0;
    err.accel_bias_mg = 0.0;
    err.accel_noise_ug_sqrt_hz = 0.0;
    const CorruptResult r = corrupt(clean, err);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(r.samples[i].f_b == clean[i].f_b);
        CHECK(r.samples[i].w_b == clean[i].w_b);
    }
}

TEST_CASE("corrupt: bias-only shifts the mean exactly") {
    SerpentineSpec spec;
    spec.duration = 2.0;
    const ImuStream clean = path_to_imu(gen_path(spec).dense);
    SensorErrorSpec err;
    err.gyro_noise_deg_s_sqrt_hz = 0.0;
    err.accel_noise_ug_sqrt_hz = 0.0;
    const CorruptResult r = corrupt(clean, err);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const Eigen::Vector3d df = r.samples[i].f_b - clean[i].f_b;
        const Eigen::Vector3d dw = r.samples[i].w_b - clean[i].w_b;
        CHECK((df - r.accel_bias).norm() < 1e-15);
        CHECK((dw - r.gyro_bias).norm() < 1e-18);
    }
    CHECK(r.gyro_bias.x() == doctest::Approx(10.0 * M_PI / 180.0 / 3600.0));
    CHECK(r.accel_bias.x() == doctest::Approx(0.03e-3 * 9.80665));
}

TEST_CASE("corrupt: noise sigma matches the density model within 1%") {
    // 10^6 samples of a static stream.
    ImuStream clean(1'000'000);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        clean[i].t = static_cast<double>(i) / 120.0;
        clean[i].f_b = {0.0, 0.0, -9.80665};
    }
    SensorErrorSpec err;
    err.gyro_bias_deg_h = 0.0;
    err.accel_bias_mg = 0.0;
    err.seed = 99;
    const CorruptResult r = corrupt(clean, err);

    double sq_g = 0.0, sq_a = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        sq_g += r.samples[i].w_b.x() * r.samples[i].w_b.x();
        sq_a += (r.samples[i].f_b.y() - clean[i].f_b.y()) *
                (r.samples[i].f_b.y() - clean[i].f_b.y());
    }
    const double sg = std::sqrt(sq_g / static_cast<double>(clean.size()));
    const double sa = std::sqrt(sq_a / static_cast<double>(clean.size()));
    CHECK(sg == doctest::Approx(err.gyro_noise_sigma(120.0)).epsilon(0.01));
    CHECK(sa == doctest::Approx(err.accel_noise_sigma(120.0)).epsilon(0.01));
}

TEST_CASE("corrupt is deterministic per seed") {
    SerpentineSpec spec;
    spec.duration = 1.0;
    const ImuStream clean = path_to_imu(gen_path(spec).dense);
    SensorErrorSpec err;
    err.seed = 1234;
    const CorruptResult a = corrupt(clean, err);
    const CorruptResult b = corrupt(clean, err);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(a.samples[i].f_b == b.samples[i].f_b);
        CHECK(a.samples[i].w_b == b.samples[i].w_b);
    }
    err.seed = 1235;
    const CorruptResult c = corrupt(clean, err);
    CHECK(a.samples[5].f_b != c.samples[5].f_b);
}

TEST_CASE("generated RTK and IMU streams share the time base") {
    SerpentineSpec spec;
    const GeneratedPath p = gen_path(spec);
    CHECK(p.rtk.front().t == 0.0);
    CHECK(p.dense.front().t == 0.0);
    // Every RTK fix time coincides with an IMU sample time (12:1 ratio).
    const double dt = 1.0 / spec.fs_imu;
    for (const auto& f : p.rtk) {
        const double r = std::fmod(f.t + 0.5 * dt, dt);
        CHECK(std::abs(r - 0.5 * dt) < 1e-9);
    }
}
