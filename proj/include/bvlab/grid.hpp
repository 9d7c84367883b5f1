#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace bvlab {

class Operator;

/// Uniform cell-centred grid on the box [lo, hi]; sample k along axis i sits
/// at lo_i + (k + 1/2) h_i. A periodic grid is the torus of the same box.
class GridGeometry {
public:
    GridGeometry(std::vector<int> shape, Eigen::VectorXd lo, Eigen::VectorXd hi, bool periodic = false);

    /// Same resolution on every axis of the cube [lo, hi]^n.
    static GridGeometry cube(int n, int cells, double lo, double hi, bool periodic = false);

    int n() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    const Eigen::VectorXd& lo() const { return lo_; }
    const Eigen::VectorXd& hi() const { return hi_; }
    bool periodic() const { return periodic_; }

    std::size_t size() const { return size_; }
    double spacing(int axis) const { return h_(axis); }
    const Eigen::VectorXd& spacing() const { return h_; }
    double min_spacing() const { return h_.minCoeff(); }
    double max_spacing() const { return h_.maxCoeff(); }
    double cell_volume() const { return h_.prod(); }

    std::vector<int> multi_index(std::size_t flat) const;
    std::size_t flat_index(const std::vector<int>& idx) const;
    /// Flat index of the neighbour offset by `step` along `axis`; wraps on
    /// periodic grids, returns size() when it leaves a box grid.
    std::size_t neighbor(std::size_t flat, int axis, int step) const;

    Eigen::VectorXd position(std::size_t flat) const;
    Eigen::VectorXd position(const std::vector<int>& idx) const;

    /// Nearest sample to x (clamped to the box).
    std::vector<int> nearest_index(const Eigen::VectorXd& x) const;

    bool operator==(const GridGeometry& other) const;

private:
    std::vector<int> shape_;
    std::vector<std::size_t> strides_;
    Eigen::VectorXd lo_, hi_, h_;
    bool periodic_;
    std::size_t size_;
};

/// V-valued samples on a GridGeometry; layout is point-major (row-major over
/// the axes, last axis fastest) with the dim components of a point contiguous.
class GridField {
public:
    GridField(GridGeometry geometry, int dim);

    using Function = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    static GridField sample(const GridGeometry& geometry, int dim, const Function& f);

    const GridGeometry& geometry() const { return geometry_; }
    int dim() const { return dim_; }
    std::size_t points() const { return geometry_.size(); }

    double& at(std::size_t point, int component) { return data_[point * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(component)]; }
    double at(std::size_t point, int component) const { return data_[point * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(component)]; }

    Eigen::Map<Eigen::VectorXd> value(std::size_t point) { return {data_.data() + point * static_cast<std::size_t>(dim_), dim_}; }
    Eigen::Map<const Eigen::VectorXd> value(std::size_t point) const { return {data_.data() + point * static_cast<std::size_t>(dim_), dim_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Multilinear interpolation (wrapping on periodic grids).
    Eigen::VectorXd interpolate(const Eigen::VectorXd& x) const;

    GridField& operator+=(const GridField& other);
    GridField& operator-=(const GridField& other);
    GridField& operator*=(double s);

    /// Pointwise linear map of the values.
    GridField transformed(const Eigen::MatrixXd& l) const;

    /// Uniform shift by whole cells along an axis (periodic grids only).
    GridField shifted(int axis, int cells) const;

    double max_abs() const;
    double rms() const;

private:
    GridGeometry geometry_;
    int dim_;
    std::vector<double> data_;
};

/// Second-order centred difference of component `component` along `axis` at
/// `point`; one-sided second order at the faces of a box grid.
double finite_difference(const GridField& u, std::size_t point, int component, int axis);

/// dimV x n matrix of finite-difference partials at one point.
Eigen::MatrixXd finite_difference_gradient(const GridField& u, std::size_t point);

/// A u by finite differences on the whole grid.
GridField apply_operator_fd(const Operator& op, const GridField& u);

// Binary format (little-endian): magic "BVGRID01", uint32 n, uint32 dim,
// uint32 periodic, uint32 reserved, n x uint64 cells per axis, n x f64 lo,
// n x f64 hi, then the samples as f64 in the in-memory layout.
void write_grid_binary(const GridField& u, std::ostream& out);
void write_grid_binary(const GridField& u, const std::filesystem::path& path);
GridField read_grid_binary(std::istream& in);
GridField read_grid_binary(const std::filesystem::path& path);

/// CSV with columns x0..x{n-1},u0..u{dim-1}, one row per grid point.
void write_grid_csv(const GridField& u, std::ostream& out);

} // namespace bvlab
