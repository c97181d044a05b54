#pragma once

#include <optional>
#include <string>
#include <vector>

#include "morpinet/simgen.hpp"
#include "morpinet/types.hpp"
#include "morpinet/window.hpp"

namespace morpinet {

/// Canonical IMU CSV (t,fx,fy,fz,wx,wy,wz): 120 Hz nominal, monotonic timestamps,
/// units m/s^2 and rad/s. Malformed rows fail with the line number.
ImuStream load_imu(const std::string& path);

/// Canonical RTK CSV (t,E,N): 10 Hz nominal ground truth in local planar meters.
RtkStream load_rtk(const std::string& path);

struct SyncResult {
    ImuStream imu;        // time-shifted copy
    RtkStream rtk;
    double offset = 0.0;  // seconds added to the IMU timestamps
    double imu_onset = 0.0;
    double rtk_onset = 0.0;
};

/// Aligns the streams by their motion onset: the first sustained gyro energy vs the
/// first sustained RTK displacement. Throws DataError when either stream shows no
/// motion.
SyncResult synchronize(const ImuStream& imu, const RtkStream& rtk);

/// Averages a stationary span into sensor biases. The accelerometer bias assumes a
/// leveled IMU (mean f should equal (0,0,-g)). Refuses spans shorter than 3 s or
/// spans with detectable motion.
CalibrationRecord static_calibrate(const ImuStream& imu, double t_start, double t_end,
                                   const LocalFrameConfig& cfg = {});

/// Planar distance between two fixes.
double gt_distance(const RtkFix& a, const RtkFix& b);

/// Heading from north of the displacement a -> b: atan2(dE, dN).
/// Throws DataError on fixes closer than 1 cm.
double gt_heading(const RtkFix& a, const RtkFix& b);

/// Builds fixed-length windows whose span covers RTK fixes two apart, targeting the
/// planar distance across the span. `hop` is in IMU samples (12 = training overlap,
/// 24 = disjoint). Windows with missing RTK fixes are skipped and counted.
WindowedDataset make_windows(const ImuStream& imu, const RtkStream& rtk, int window_len,
                             int hop, const std::string& trajectory_id = "traj");

/// Appends the windows of another trajectory into `into` (re-mapping trajectory ids).
void merge_windows(WindowedDataset& into, const WindowedDataset& from);

enum class TrajectoryRole { Train, Test, Straight };

struct ManifestEntry {
    std::string id;
    TrajectoryRole role = TrajectoryRole::Train;
    std::vector<std::string> imu_files;
    std::string rtk_file;
    double static_start = 0.0;
    double static_end = 0.0;
    std::optional<double> known_distance;  // m, for gain calibration segments
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

/// JSON manifest listing the trajectories, their roles and files. Relative paths are
/// resolved against the manifest's directory.
Manifest load_manifest(const std::string& path);

/// Content digest over the serialized window payload; identical inputs yield
/// identical digests.
std::string window_dataset_digest(const WindowedDataset& ds);

/// Binary windowed-dataset cache with a JSON header and a content digest.
void save_window_cache(const std::string& path, const WindowedDataset& ds);
WindowedDataset load_window_cache(const std::string& path);

}  // namespace morpinet
