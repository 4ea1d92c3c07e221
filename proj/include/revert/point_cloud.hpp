#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "revert/simd/kernels.hpp"

namespace revert {

// Points of a 2D or 3D surface sample, stored per axis so the distance
// kernels can stream them.
class PointCloud {
public:
    explicit PointCloud(int dim = 2);
    static PointCloud from_points(std::span<const Eigen::VectorXd> points);
    static PointCloud from_xy(std::span<const double> xs, std::span<const double> ys);

    void add(std::span<const double> p);
    void add(const Eigen::VectorXd& p) { add(std::span<const double>(p.data(), p.size())); }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return axes_[0].size(); }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }

    [[nodiscard]] double coord(std::size_t i, int axis) const { return axes_[axis][i]; }
    [[nodiscard]] Eigen::VectorXd point(std::size_t i) const;
    [[nodiscard]] std::span<const double> axis(int a) const { return axes_[a]; }
    [[nodiscard]] simd::PlanarPoints planar() const;

    void set(std::size_t i, std::span<const double> p);

private:
    int dim_;
    std::array<std::vector<double>, 3> axes_;
};

// CSV with one point per row ("x,y" or "x,y,z"); a non-numeric first row is
// treated as a header. Throws std::runtime_error on malformed input.
PointCloud read_point_cloud_csv(const std::filesystem::path& path);
void write_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace revert
