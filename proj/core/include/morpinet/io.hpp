#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morpinet/simgen.hpp"
#include "morpinet/types.hpp"

namespace morpinet {

/// FNV-1a 64-bit digest, rendered as "fnv1a:<16 hex digits>".
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string digest_string(const std::string& bytes);
std::string digest_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Canonical CSV schemas. IMU: t,fx,fy,fz,wx,wy,wz at 120 Hz nominal.
// RTK: t,E,N at 10 Hz nominal. Trajectory: t,x_north_m,y_east_m,psi_rad.

void write_imu_csv(const std::string& path, const ImuStream& samples);
void write_rtk_csv(const std::string& path, const RtkStream& fixes);
void write_trajectory_csv(const std::string& path, const Trajectory2D& traj);
Trajectory2D read_trajectory_csv(const std::string& path);

/// GeoJSON LineString with local planar meters as coordinates (east, north).
void write_trajectory_geojson(const std::string& path, const Trajectory2D& traj);

/// Splits one CSV line on commas (no quoting; the canonical formats never quote).
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a double, throwing DataError with file/line context on failure.
double parse_double(const std::string& field, const std::string& file, std::size_t line_no);

}  // namespace morpinet
