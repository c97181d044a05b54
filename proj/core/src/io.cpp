#include "morpinet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "morpinet/errors.hpp"

namespace morpinet {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string digest_string(const std::string& bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("failed writing file: " + path);
}

std::string digest_file(const std::string& path) {
    return digest_string(read_file(path));
}

void write_imu_csv(const std::string& path, const ImuStream& samples) {
    std::ostringstream os;
    os << "t,fx,fy,fz,wx,wy,wz\n";
    char line[256];
    for (const auto& m : samples) {
        std::snprintf(line, sizeof(line), "%.9f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      m.t, m.f_b.x(), m.f_b.y(), m.f_b.z(), m.w_b.x(), m.w_b.y(),
                      m.w_b.z());
        os << line;
    }
    write_file(path, os.str());
}

void write_rtk_csv(const std::string& path, const RtkStream& fixes) {
    std::ostringstream os;
    os << "t,E,N\n";
    char line[128];
    for (const auto& f : fixes) {
        std::snprintf(line, sizeof(line), "%.9f,%.12g,%.12g\n", f.t, f.e, f.n);
        os << line;
    }
    write_file(path, os.str());
}

void write_trajectory_csv(const std::string& path, const Trajectory2D& traj) {
    std::ostringstream os;
    os << "t,x_north_m,y_east_m,psi_rad\n";
    char line[160];
    for (const auto& p : traj.points) {
        std::snprintf(line, sizeof(line), "%.9f,%.12g,%.12g,%.12g\n", p.t, p.pose.x,
                      p.pose.y, p.pose.psi);
        os << line;
    }
    write_file(path, os.str());
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& field, const std::string& file,
                    std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError(file + ":" + std::to_string(line_no) + ": malformed number '" +
                        field + "'");
    }
}

Trajectory2D read_trajectory_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty trajectory file");
    Trajectory2D traj;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 4 columns, got " + std::to_string(fields.size()));
        }
        traj.push_back(parse_double(fields[0], path, line_no),
                       {parse_double(fields[1], path, line_no),
                        parse_double(fields[2], path, line_no),
                        parse_double(fields[3], path, line_no)});
    }
    traj.validate();
    return traj;
}

void write_trajectory_geojson(const std::string& path, const Trajectory2D& traj) {
    std::ostringstream os;
    os << "{\"type\":\"Feature\",\"properties\":{\"crs\":\"local-ned-meters\"},"
          "\"geometry\":{\"type\":\"LineString\",\"coordinates\":[";
    char buf[80];
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const auto& p = traj.points[i];
        std::snprintf(buf, sizeof(buf), "%s[%.12g,%.12g]", i ? "," : "", p.pose.y,
                      p.pose.x);
        os << buf;
    }
    os << "]}}\n";
    write_file(path, os.str());
}

}  // namespace morpinet
