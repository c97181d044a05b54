#include "morpinet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "morpinet/errors.hpp"

namespace morpinet {

namespace {

Eigen::Vector2d interp_gt(const Trajectory2D& gt, double t) {
    const auto& pts = gt.points;
    if (t <= pts.front().t) return {pts.front().pose.x, pts.front().pose.y};
    if (t >= pts.back().t) return {pts.back().pose.x, pts.back().pose.y};
    const auto it = std::lower_bound(pts.begin(), pts.end(), t,
                                     [](const TimedPose2D& p, double v) { return p.t < v; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    return {a.pose.x + u * (b.pose.x - a.pose.x), a.pose.y + u * (b.pose.y - a.pose.y)};
}

std::vector<double> position_errors(const Trajectory2D& est, const Trajectory2D& gt) {
    if (est.empty()) throw DataError("position metric: empty estimate");
    if (gt.empty()) throw DataError("position metric: empty ground truth");
    if (est.points.back().t < gt.points.front().t ||
        est.points.front().t > gt.points.back().t) {
        throw DataError("position metric: no temporal overlap between estimate and GT");
    }
    std::vector<double> errs;
    errs.reserve(est.size());
    for (const auto& p : est.points) {
        const Eigen::Vector2d g = interp_gt(gt, p.t);
        errs.push_back(std::hypot(p.pose.x - g.x(), p.pose.y - g.y()));
    }
    return errs;
}

}  // namespace

double prmse(const Trajectory2D& est, const Trajectory2D& gt) {
    const std::vector<double> errs = position_errors(est, gt);
    double s = 0.0;
    for (double e : errs) s += e * e;
    return std::sqrt(s / static_cast<double>(errs.size()));
}

double pmae(const Trajectory2D& est, const Trajectory2D& gt) {
    const std::vector<double> errs = position_errors(est, gt);
    double s = 0.0;
    for (double e : errs) s += e;
    return s / static_cast<double>(errs.size());
}

static void check_lengths(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("distance metric: length mismatch");
    if (a.empty()) throw DataError("distance metric: empty input");
}

double drmse(const std::vector<double>& d_est, const std::vector<double>& d_gt) {
    check_lengths(d_est, d_gt);
    double s = 0.0;
    for (std::size_t i = 0; i < d_est.size(); ++i) {
        const double e = d_est[i] - d_gt[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(d_est.size()));
}

double dmae(const std::vector<double>& d_est, const std::vector<double>& d_gt) {
    check_lengths(d_est, d_gt);
    double s = 0.0;
    for (std::size_t i = 0; i < d_est.size(); ++i) s += std::abs(d_est[i] - d_gt[i]);
    return s / static_cast<double>(d_est.size());
}

double dbias(const std::vector<double>& d_est, const std::vector<double>& d_gt) {
    check_lengths(d_est, d_gt);
    double s = 0.0;
    for (std::size_t i = 0; i < d_est.size(); ++i) s += d_est[i] - d_gt[i];
    return s / static_cast<double>(d_est.size());
}

double improvement_percent(double baseline, double ours) {
    if (baseline == 0.0) return 0.0;
    return (baseline - ours) / baseline * 100.0;
}

Trajectory2D rtk_to_trajectory(const RtkStream& rtk) {
    Trajectory2D traj;
    double psi = 0.0;
    for (std::size_t i = 0; i < rtk.size(); ++i) {
        if (i + 1 < rtk.size()) {
            const double de = rtk[i + 1].e - rtk[i].e;
            const double dn = rtk[i + 1].n - rtk[i].n;
            if (std::hypot(de, dn) > 0.01) psi = std::atan2(de, dn);
        }
        traj.push_back(rtk[i].t, {rtk[i].n, rtk[i].e, psi});
    }
    return traj;
}

double path_length(const Trajectory2D& traj) {
    double s = 0.0;
    for (std::size_t i = 1; i < traj.points.size(); ++i) {
        s += std::hypot(traj.points[i].pose.x - traj.points[i - 1].pose.x,
                        traj.points[i].pose.y - traj.points[i - 1].pose.y);
    }
    return s;
}

BenchmarkResult benchmark(const std::vector<BenchmarkEntry>& entries,
                          const std::map<std::string, Trajectory2D>& gt_by_trajectory,
                          const std::map<std::string, double>& update_rate_by_method) {
    BenchmarkResult result;

    // method -> trajectory -> list of per-stream metric pairs
    std::map<std::string, std::map<std::string, std::vector<RunReport>>> cells;
    for (const auto& e : entries) {
        const auto gt_it = gt_by_trajectory.find(e.trajectory);
        if (gt_it == gt_by_trajectory.end()) {
            result.missing.push_back(e.method + "/" + e.trajectory + " (no GT)");
            continue;
        }
        RunReport r;
        r.method = e.method;
        r.trajectory = e.trajectory;
        r.prmse_m = prmse(e.estimate, gt_it->second);
        r.pmae_m = pmae(e.estimate, gt_it->second);
        r.path_length_m = path_length(e.estimate);
        r.duration_s = e.estimate.points.back().t - e.estimate.points.front().t;
        cells[e.method][e.trajectory].push_back(r);
    }

    for (const auto& [method, by_traj] : cells) {
        RunReport method_avg;
        method_avg.method = method;
        method_avg.trajectory = "avg";
        int n_traj = 0;
        for (const auto& [traj, runs] : by_traj) {
            RunReport avg;
            avg.method = method;
            avg.trajectory = traj;
            for (const auto& r : runs) {
                avg.prmse_m += r.prmse_m;
                avg.pmae_m += r.pmae_m;
                avg.path_length_m += r.path_length_m;
                avg.duration_s += r.duration_s;
            }
            const double n = static_cast<double>(runs.size());
            avg.prmse_m /= n;
            avg.pmae_m /= n;
            avg.path_length_m /= n;
            avg.duration_s /= n;
            avg.streams_averaged = static_cast<int>(runs.size());
            if (auto it = update_rate_by_method.find(method); it != update_rate_by_method.end()) {
                avg.update_rate_hz = it->second;
            }
            result.per_trajectory.push_back(avg);

            method_avg.prmse_m += avg.prmse_m;
            method_avg.pmae_m += avg.pmae_m;
            method_avg.path_length_m += avg.path_length_m;
            method_avg.duration_s += avg.duration_s;
            ++n_traj;
        }
        if (n_traj > 0) {
            method_avg.prmse_m /= n_traj;
            method_avg.pmae_m /= n_traj;
            method_avg.path_length_m /= n_traj;
            method_avg.duration_s /= n_traj;
            if (auto it = update_rate_by_method.find(method); it != update_rate_by_method.end()) {
                method_avg.update_rate_hz = it->second;
            }
            result.per_method[method] = method_avg;
        }
    }
    return result;
}

std::string render_comparison_table(const BenchmarkResult& result,
                                    const std::string& reference_method) {
    std::ostringstream os;
    os << "method          rate[Hz]  PRMSE[m]  impr[%]  PMAE[m]  impr[%]\n";
    const auto ref = result.per_method.find(reference_method);
    char line[160];
    for (const auto& [method, r] : result.per_method) {
        if (ref != result.per_method.end() && method != reference_method) {
            std::snprintf(line, sizeof(line), "%-15s %8.2f %9.3f %8.0f %8.3f %8.0f\n",
                          method.c_str(), r.update_rate_hz, r.prmse_m,
                          std::round(improvement_percent(r.prmse_m, ref->second.prmse_m)),
                          r.pmae_m,
                          std::round(improvement_percent(r.pmae_m, ref->second.pmae_m)));
        } else {
            std::snprintf(line, sizeof(line), "%-15s %8.2f %9.3f %8s %8.3f %8s\n",
                          method.c_str(), r.update_rate_hz, r.prmse_m, "-", r.pmae_m, "-");
        }
        os << line;
    }
    for (const auto& m : result.missing) os << "missing: " << m << "\n";
    return os.str();
}

}  // namespace morpinet
