#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morpinet/types.hpp"

namespace morpinet {

/// Position RMSE between an estimate and ground truth. The ground truth is linearly
/// interpolated to the estimate timestamps (estimates are never interpolated);
/// timestamps outside the GT span clamp to its endpoints. Throws DataError when the
/// time ranges do not overlap.
double prmse(const Trajectory2D& est, const Trajectory2D& gt);

/// Position mean absolute error; same alignment rules as prmse.
double pmae(const Trajectory2D& est, const Trajectory2D& gt);

/// Per-window distance RMSE.
double drmse(const std::vector<double>& d_est, const std::vector<double>& d_gt);

/// Per-window distance mean absolute error |d - d_hat|.
double dmae(const std::vector<double>& d_est, const std::vector<double>& d_gt);

/// Signed mean of (d_est - d_gt); reported alongside dmae.
double dbias(const std::vector<double>& d_est, const std::vector<double>& d_gt);

/// (baseline - ours) / baseline * 100.
double improvement_percent(double baseline, double ours);

struct RunReport {
    std::string method;
    std::string trajectory;
    double prmse_m = 0.0;
    double pmae_m = 0.0;
    std::optional<double> drmse_m;  // distance-regressor runs only
    std::optional<double> dmae_m;
    double update_rate_hz = 0.0;
    double path_length_m = 0.0;
    double duration_s = 0.0;
    int streams_averaged = 1;
};

struct BenchmarkResult {
    std::vector<RunReport> per_trajectory;       // averaged over IMU streams
    std::map<std::string, RunReport> per_method; // averaged over trajectories
    std::vector<std::string> missing;            // (method, trajectory) cells not run
};

struct BenchmarkEntry {
    std::string method;
    std::string trajectory;
    std::string stream;  // IMU id within the trajectory
    Trajectory2D estimate;
};

/// Averages metrics over the IMU streams of each trajectory, then over trajectories.
/// Missing cells are listed; the table is still produced.
BenchmarkResult benchmark(const std::vector<BenchmarkEntry>& entries,
                          const std::map<std::string, Trajectory2D>& gt_by_trajectory,
                          const std::map<std::string, double>& update_rate_by_method);

/// Plain-text comparison table: update rate, PRMSE/PMAE and improvement of the first
/// method over each baseline.
std::string render_comparison_table(const BenchmarkResult& result,
                                    const std::string& reference_method);

/// Total folded path length of a trajectory.
double path_length(const Trajectory2D& traj);

/// RTK fixes as a ground-truth trajectory (x = north, y = east; heading between
/// consecutive fixes, carried forward over stationary gaps).
Trajectory2D rtk_to_trajectory(const RtkStream& rtk);

}  // namespace morpinet
