#include "morpinet/pipeline.hpp"

#include <cmath>

#include "morpinet/errors.hpp"

namespace morpinet {

namespace {

ImuStream subtract_biases(const ImuStream& samples,
                          const std::optional<CalibrationRecord>& calib) {
    if (!calib) return samples;
    ImuStream out = samples;
    for (auto& m : out) {
        m.f_b -= calib->accel_bias;
        m.w_b -= calib->gyro_bias;
    }
    return out;
}

}  // namespace

MorpinetRun morpinet_reconstruct(const ImuStream& samples, const DnetWeights& weights,
                                 const Pose2D& init, const MorpinetRunConfig& cfg) {
    if (samples.size() < static_cast<std::size_t>(cfg.window)) {
        throw DataError("morpinet_reconstruct: stream shorter than one window");
    }
    if (cfg.hop < 1) throw DataError("morpinet_reconstruct: hop must be >= 1");
    validate_stream(samples);

    // Heading from the orientation filter over the whole (bias-subtracted) stream;
    // the distance network sees the raw windows.
    const Quaternion q0 = Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), init.psi);
    const AhrsRun ahrs = heading_series(subtract_biases(samples, cfg.calib), q0, cfg.ahrs);

    const std::size_t n_windows =
        (samples.size() - static_cast<std::size_t>(cfg.window)) /
            static_cast<std::size_t>(cfg.hop) + 1;

    std::vector<Window> windows(n_windows);
    for (std::size_t k = 0; k < n_windows; ++k) {
        const std::size_t start = k * static_cast<std::size_t>(cfg.hop);
        Window& w = windows[k];
        w.t_start = samples[start].t;
        for (int s = 0; s < cfg.window; ++s) {
            const ImuSample& m = samples[start + static_cast<std::size_t>(s)];
            w.at(0, s) = m.f_b.x();
            w.at(1, s) = m.f_b.y();
            w.at(2, s) = m.f_b.z();
            w.at(3, s) = m.w_b.x();
            w.at(4, s) = m.w_b.y();
            w.at(5, s) = m.w_b.z();
        }
    }
    const Eigen::VectorXd predicted = dnet_predict(weights, windows);

    MorpinetRun run;
    run.traj.push_back(samples.front().t, init);
    Pose2D pose = init;
    run.distances.reserve(n_windows);
    for (std::size_t k = 0; k < n_windows; ++k) {
        double s = predicted(static_cast<Eigen::Index>(k));
        if (s < 0.0) {
            s = 0.0;
            ++run.clamped;
        }
        const std::size_t start = k * static_cast<std::size_t>(cfg.hop);
        const double psi_bar =
            mean_heading(ahrs.yaw, start, static_cast<std::size_t>(cfg.window));
        pose.x += s * std::cos(psi_bar);
        pose.y += s * std::sin(psi_bar);
        pose.psi = wrap_angle(psi_bar);
        run.distances.push_back(s);
        run.traj.push_back(samples[start + static_cast<std::size_t>(cfg.window) - 1].t,
                           pose);
    }
    return run;
}

Method method_from_name(const std::string& name) {
    if (name == "ins2d") return Method::Ins2D;
    if (name == "ins3d") return Method::Ins3D;
    if (name == "morpi-a") return Method::MorpiA;
    if (name == "morpi-g") return Method::MorpiG;
    if (name == "morpinet") return Method::Morpinet;
    throw DataError("unknown method '" + name +
                    "' (expected ins2d|ins3d|morpi-a|morpi-g|morpinet)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Ins2D: return "ins2d";
        case Method::Ins3D: return "ins3d";
        case Method::MorpiA: return "morpi-a";
        case Method::MorpiG: return "morpi-g";
        case Method::Morpinet: return "morpinet";
    }
    return "?";
}

namespace {

Trajectory2D run_morpi(MorpiMode mode, const ImuStream& samples,
                       const MethodArtifacts& art) {
    if (!art.gain) {
        throw DataError("method " + std::string(mode == MorpiMode::AccelY ? "morpi-a"
                                                                          : "morpi-g") +
                        ": gain record required (run calibrate-gain first)");
    }
    if (art.gain->mode != mode) {
        throw DataError("gain record mode does not match the requested method");
    }
    const ImuStream calibrated = subtract_biases(samples, art.calib);
    MadgwickConfig ahrs_cfg = art.ahrs;
    if (art.gyro_only_heading) ahrs_cfg.gamma = 0.0;
    const Quaternion q0 =
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), art.init.psi);
    const AhrsRun ahrs = heading_series(calibrated, q0, ahrs_cfg);
    return morpi_reconstruct(calibrated, *art.gain, ahrs.yaw, art.init);
}

}  // namespace

Trajectory2D run_method(Method method, const ImuStream& samples,
                        const MethodArtifacts& art) {
    switch (method) {
        case Method::Ins2D:
        case Method::Ins3D: {
            InsState init;
            init.p_l = {art.init.x, art.init.y, 0.0};
            init.r_bl = Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(),
                                                    art.init.psi).to_rotation_matrix();
            const InsRun run = ins_propagate(
                samples, init,
                method == Method::Ins2D ? InsMode::Mode2D : InsMode::Mode3D,
                LocalFrameConfig{}, art.calib);
            return run.traj;
        }
        case Method::MorpiA:
            return run_morpi(MorpiMode::AccelY, samples, art);
        case Method::MorpiG:
            return run_morpi(MorpiMode::GyroZ, samples, art);
        case Method::Morpinet: {
            if (!art.weights) {
                throw DataError("method morpinet: weights file required (run train first)");
            }
            MorpinetRunConfig cfg;
            cfg.ahrs = art.ahrs;
            cfg.calib = art.calib;
            return morpinet_reconstruct(samples, *art.weights, art.init, cfg).traj;
        }
    }
    throw DataError("run_method: unreachable method");
}

}  // namespace morpinet
