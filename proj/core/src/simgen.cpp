#include "morpinet/simgen.hpp"

#include <cmath>
#include <random>

#include "morpinet/errors.hpp"

namespace morpinet {

void SerpentineSpec::validate() const {
    if (!(speed > 0.0)) throw NumericError("serpentine speed must be > 0");
    if (!(duration > 0.0)) throw NumericError("serpentine duration must be > 0");
    if (!(frequency < fs_rtk / 4.0)) {
        throw NumericError("weave frequency must stay below fs_rtk/4");
    }
    if (!(fs_imu > 0.0) || !(fs_rtk > 0.0)) throw NumericError("sample rates must be > 0");
}

Eigen::Vector3d SensorErrorSpec::gyro_bias_rad_s() const {
    const double b = gyro_bias_deg_h * M_PI / 180.0 / 3600.0;
    return {b, b, b};
}

Eigen::Vector3d SensorErrorSpec::accel_bias_ms2() const {
    const double b = accel_bias_mg * 1e-3 * 9.80665;
    return {b, b, b};
}

double SensorErrorSpec::gyro_noise_sigma(double fs) const {
    return gyro_noise_deg_s_sqrt_hz * M_PI / 180.0 * std::sqrt(fs);
}

double SensorErrorSpec::accel_noise_sigma(double fs) const {
    return accel_noise_ug_sqrt_hz * 1e-6 * 9.80665 * std::sqrt(fs);
}

namespace {

// Path: p(t) = v*t*dir + A*sin(2*pi*f*t)*perp, in (north, east) coordinates.
struct PathEval {
    Eigen::Vector2d pos, vel, acc;
};

PathEval eval_path(const SerpentineSpec& s, double t) {
    const Eigen::Vector2d dir{std::cos(s.heading), std::sin(s.heading)};
    const Eigen::Vector2d perp{-std::sin(s.heading), std::cos(s.heading)};
    const double w = 2.0 * M_PI * s.frequency;
    PathEval e;
    e.pos = s.speed * t * dir + s.amplitude * std::sin(w * t) * perp;
    e.vel = s.speed * dir + s.amplitude * w * std::cos(w * t) * perp;
    e.acc = -s.amplitude * w * w * std::sin(w * t) * perp;
    return e;
}

}  // namespace

GeneratedPath gen_path(const SerpentineSpec& spec) {
    spec.validate();

    GeneratedPath out;
    const auto n_imu = static_cast<std::size_t>(std::llround(spec.duration * spec.fs_imu));
    out.dense.reserve(n_imu + 1);
    for (std::size_t i = 0; i <= n_imu; ++i) {
        const double t = static_cast<double>(i) / spec.fs_imu;
        const PathEval e = eval_path(spec, t);
        DensePathPoint p;
        p.t = t;
        p.pos = e.pos;
        p.vel = e.vel;
        p.acc = e.acc;
        p.psi = std::atan2(e.vel.y(), e.vel.x());
        const double v2 = e.vel.squaredNorm();
        p.psi_dot = (e.vel.x() * e.acc.y() - e.vel.y() * e.acc.x()) / v2;
        out.dense.push_back(p);
    }

    const auto n_rtk = static_cast<std::size_t>(std::llround(spec.duration * spec.fs_rtk));
    out.rtk.reserve(n_rtk + 1);
    for (std::size_t i = 0; i <= n_rtk; ++i) {
        const double t = static_cast<double>(i) / spec.fs_rtk;
        const PathEval e = eval_path(spec, t);
        out.rtk.push_back({t, e.pos.y(), e.pos.x()});
    }
    return out;
}

ImuStream path_to_imu(const std::vector<DensePathPoint>& dense,
                      const LocalFrameConfig& cfg) {
    ImuStream out;
    out.reserve(dense.size());
    for (const auto& p : dense) {
        const double c = std::cos(p.psi), sn = std::sin(p.psi);
        ImuSample m;
        m.t = p.t;
        // Body x along the course; planar, so f_z = -g (z down).
        m.f_b.x() = c * p.acc.x() + sn * p.acc.y();
        m.f_b.y() = -sn * p.acc.x() + c * p.acc.y();
        m.f_b.z() = -cfg.gravity_magnitude;
        m.w_b = {0.0, 0.0, p.psi_dot};
        out.push_back(m);
    }
    return out;
}

CorruptResult corrupt(const ImuStream& clean, const SensorErrorSpec& err) {
    CorruptResult out;
    out.samples = clean;
    out.gyro_bias = err.gyro_bias_rad_s();
    out.accel_bias = err.accel_bias_ms2();

    double fs = 120.0;
    if (clean.size() > 1) {
        fs = static_cast<double>(clean.size() - 1) / (clean.back().t - clean.front().t);
    }
    const double sg = err.gyro_noise_sigma(fs);
    const double sa = err.accel_noise_sigma(fs);

    std::mt19937_64 rng(err.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& m : out.samples) {
        for (int k = 0; k < 3; ++k) {
            m.f_b(k) += out.accel_bias(k) + (sa > 0.0 ? sa * gauss(rng) : 0.0);
            m.w_b(k) += out.gyro_bias(k) + (sg > 0.0 ? sg * gauss(rng) : 0.0);
        }
    }
    return out;
}

namespace {

double simpson(const SerpentineSpec& s, double a, double b) {
    const double m = 0.5 * (a + b);
    const double fa = eval_path(s, a).vel.norm();
    const double fm = eval_path(s, m).vel.norm();
    const double fb = eval_path(s, b).vel.norm();
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const SerpentineSpec& s, double a, double b, double whole, double tol,
                int depth) {
    const double m = 0.5 * (a + b);
    const double left = simpson(s, a, m);
    const double right = simpson(s, m, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive(s, a, m, left, 0.5 * tol, depth - 1) +
           adaptive(s, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double serpentine_arc_length(const SerpentineSpec& spec) {
    spec.validate();
    return adaptive(spec, 0.0, spec.duration, simpson(spec, 0.0, spec.duration), 1e-9, 40);
}

}  // namespace morpinet
