#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "morpinet/types.hpp"

namespace morpinet {

/// Planar serpentine path: straight baseline along `heading` with a sinusoidal
/// lateral weave.
struct SerpentineSpec {
    double heading = 0.0;       // rad from north
    double speed = 1.0;         // m/s along the baseline
    double amplitude = 0.5;     // m lateral weave
    double frequency = 0.5;     // Hz weave
    double duration = 10.0;     // s
    double fs_imu = 120.0;      // Hz
    double fs_rtk = 10.0;       // Hz

    void validate() const;
};

/// Movella-DOT-class sensor error model: constant bias plus white noise.
struct SensorErrorSpec {
    double gyro_bias_deg_h = 10.0;        // deg/h, applied to each axis
    double gyro_noise_deg_s_sqrt_hz = 0.007;
    double accel_bias_mg = 0.03;          // milli-g, applied to each axis
    double accel_noise_ug_sqrt_hz = 120.0;
    std::uint64_t seed = 0;

    Eigen::Vector3d gyro_bias_rad_s() const;
    Eigen::Vector3d accel_bias_ms2() const;
    double gyro_noise_sigma(double fs) const;   // rad/s at sample rate fs
    double accel_noise_sigma(double fs) const;  // m/s^2 at sample rate fs
};

/// Dense ground truth sampled at fs_imu, all quantities closed-form.
struct DensePathPoint {
    double t = 0.0;
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();  // (north, east), m
    Eigen::Vector2d vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double psi = 0.0;      // course angle, rad from north
    double psi_dot = 0.0;  // rad/s
};

struct GeneratedPath {
    RtkStream rtk;
    std::vector<DensePathPoint> dense;
};

GeneratedPath gen_path(const SerpentineSpec& spec);

/// Inverts the planar equations of motion: f_b = Rot(-psi)*(a - g) with z down,
/// omega_z = psi_dot. A clean stream that round-trips through the 3D strapdown.
ImuStream path_to_imu(const std::vector<DensePathPoint>& dense,
                      const LocalFrameConfig& cfg = {});

struct CorruptResult {
    ImuStream samples;
    Eigen::Vector3d gyro_bias;   // realized bias, rad/s
    Eigen::Vector3d accel_bias;  // realized bias, m/s^2
};

/// Adds constant bias and seeded white noise; deterministic per (stream, spec, seed).
CorruptResult corrupt(const ImuStream& clean, const SensorErrorSpec& err);

/// Closed-form path length of the serpentine over [0, duration] via adaptive
/// Simpson quadrature of |v(t)| (tolerance 1e-9).
double serpentine_arc_length(const SerpentineSpec& spec);

}  // namespace morpinet
