#include "revert/point_cloud.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace revert {

PointCloud::PointCloud(int dim) : dim_(dim) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("point cloud dimension must be 2 or 3");
}

PointCloud PointCloud::from_points(std::span<const Eigen::VectorXd> points) {
    if (points.empty()) return PointCloud(2);
    PointCloud cloud(static_cast<int>(points.front().size()));
    for (const auto& p : points) cloud.add(p);
    return cloud;
}

PointCloud PointCloud::from_xy(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("x/y size mismatch");
    PointCloud cloud(2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double p[2] = {xs[i], ys[i]};
        cloud.add(p);
    }
    return cloud;
}

void PointCloud::add(std::span<const double> p) {
    if (static_cast<int>(p.size()) != dim_) {
        throw std::invalid_argument("point dimension does not match cloud dimension");
    }
    for (int a = 0; a < dim_; ++a) {
        if (!std::isfinite(p[a])) throw std::invalid_argument("point coordinates must be finite");
    }
    for (int a = 0; a < dim_; ++a) axes_[a].push_back(p[a]);
}

void PointCloud::set(std::size_t i, std::span<const double> p) {
    if (static_cast<int>(p.size()) != dim_) {
        throw std::invalid_argument("point dimension does not match cloud dimension");
    }
    for (int a = 0; a < dim_; ++a) axes_[a].at(i) = p[a];
}

Eigen::VectorXd PointCloud::point(std::size_t i) const {
    Eigen::VectorXd p(dim_);
    for (int a = 0; a < dim_; ++a) p[a] = axes_[a][i];
    return p;
}

simd::PlanarPoints PointCloud::planar() const {
    return {axes_[0], axes_[1], dim_ == 3 ? std::span<const double>(axes_[2])
                                          : std::span<const double>()};
}

namespace {

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

PointCloud read_point_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point cloud '" + path.string() + "'");
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split(line);
        std::vector<double> row;
        bool numeric = true;
        for (const auto f : fields) {
            double v = 0.0;
            if (!parse_double(f, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (rows.empty() && line_no == 1) continue;  // header
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": non-numeric field");
        }
        if (row.size() != 2 && row.size() != 3) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 2 or 3 columns");
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": inconsistent dimension");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("point cloud '" + path.string() + "' is empty");
    PointCloud cloud(static_cast<int>(rows.front().size()));
    for (const auto& r : rows) cloud.add(r);
    return cloud;
}

void write_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << (cloud.dim() == 2 ? "x,y\n" : "x,y,z\n");
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < cloud.dim(); ++a) {
            if (a) out << ',';
            out << cloud.coord(i, a);
        }
        out << '\n';
    }
}

}  // namespace revert
