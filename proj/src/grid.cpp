#include "bvlab/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "bvlab/errors.hpp"
#include "bvlab/operator.hpp"

namespace bvlab {

GridGeometry::GridGeometry(std::vector<int> shape, Eigen::VectorXd lo, Eigen::VectorXd hi, bool periodic)
    : shape_(std::move(shape)), lo_(std::move(lo)), hi_(std::move(hi)), periodic_(periodic)
{
    const auto n = static_cast<Eigen::Index>(shape_.size());
    if (n < 1 || lo_.size() != n || hi_.size() != n) {
        throw InputError("grid: shape, lo and hi must share one dimension >= 1");
    }
    h_.resize(n);
    strides_.assign(shape_.size(), 1);
    size_ = 1;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        const int cells = shape_[static_cast<std::size_t>(i)];
        if (cells < 1) {
            throw InputError("grid: every axis needs at least one cell");
        }
        if (!(hi_(i) > lo_(i)) || !std::isfinite(lo_(i)) || !std::isfinite(hi_(i))) {
            throw InputError("grid: box must satisfy lo < hi with finite bounds");
        }
        h_(i) = (hi_(i) - lo_(i)) / cells;
        strides_[static_cast<std::size_t>(i)] = size_;
        size_ *= static_cast<std::size_t>(cells);
    }
}

GridGeometry GridGeometry::cube(int n, int cells, double lo, double hi, bool periodic)
{
    return GridGeometry(std::vector<int>(static_cast<std::size_t>(n), cells), Eigen::VectorXd::Constant(n, lo),
                        Eigen::VectorXd::Constant(n, hi), periodic);
}

std::vector<int> GridGeometry::multi_index(std::size_t flat) const
{
    std::vector<int> idx(shape_.size());
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        idx[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
    return idx;
}

std::size_t GridGeometry::flat_index(const std::vector<int>& idx) const
{
    std::size_t flat = 0;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        flat += static_cast<std::size_t>(idx[i]) * strides_[i];
    }
    return flat;
}

std::size_t GridGeometry::neighbor(std::size_t flat, int axis, int step) const
{
    const auto a = static_cast<std::size_t>(axis);
    const int cells = shape_[a];
    const int k = static_cast<int>((flat / strides_[a]) % static_cast<std::size_t>(cells));
    int kk = k + step;
    if (periodic_) {
        kk = ((kk % cells) + cells) % cells;
    } else if (kk < 0 || kk >= cells) {
        return size_;
    }
    return flat + static_cast<std::size_t>(kk - k) * strides_[a];
}

Eigen::VectorXd GridGeometry::position(std::size_t flat) const
{
    return position(multi_index(flat));
}

Eigen::VectorXd GridGeometry::position(const std::vector<int>& idx) const
{
    Eigen::VectorXd x(n());
    for (int i = 0; i < n(); ++i) {
        x(i) = lo_(i) + (idx[static_cast<std::size_t>(i)] + 0.5) * h_(i);
    }
    return x;
}

std::vector<int> GridGeometry::nearest_index(const Eigen::VectorXd& x) const
{
    std::vector<int> idx(shape_.size());
    for (int i = 0; i < n(); ++i) {
        const int k = static_cast<int>(std::floor((x(i) - lo_(i)) / h_(i)));
        idx[static_cast<std::size_t>(i)] = std::clamp(k, 0, shape_[static_cast<std::size_t>(i)] - 1);
    }
    return idx;
}

bool GridGeometry::operator==(const GridGeometry& other) const
{
    return shape_ == other.shape_ && lo_ == other.lo_ && hi_ == other.hi_ && periodic_ == other.periodic_;
}

GridField::GridField(GridGeometry geometry, int dim)
    : geometry_(std::move(geometry)), dim_(dim), data_(geometry_.size() * static_cast<std::size_t>(dim), 0.0)
{
    if (dim < 1) {
        throw InputError("grid field needs at least one component");
    }
}

GridField GridField::sample(const GridGeometry& geometry, int dim, const Function& f)
{
    GridField u(geometry, dim);
    for (std::size_t p = 0; p < geometry.size(); ++p) {
        const Eigen::VectorXd v = f(geometry.position(p));
        if (v.size() != dim) {
            throw InputError("sampled function returned a vector of the wrong length");
        }
        u.value(p) = v;
    }
    return u;
}

Eigen::VectorXd GridField::interpolate(const Eigen::VectorXd& x) const
{
    const int n = geometry_.n();
    if (x.size() != n) {
        throw InputError("interpolation point has wrong dimension");
    }
    std::vector<int> base(static_cast<std::size_t>(n));
    std::vector<double> frac(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = (x(i) - geometry_.lo()(i)) / geometry_.spacing(i) - 0.5;
        const int cells = geometry_.shape()[static_cast<std::size_t>(i)];
        int k = static_cast<int>(std::floor(s));
        double t = s - k;
        if (!geometry_.periodic()) {
            if (k < 0) {
                k = 0;
                t = 0.0;
            } else if (k >= cells - 1) {
                k = std::max(cells - 2, 0);
                t = cells > 1 ? 1.0 : 0.0;
            }
        }
        base[static_cast<std::size_t>(i)] = k;
        frac[static_cast<std::size_t>(i)] = t;
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    for (int corner = 0; corner < (1 << n); ++corner) {
        double w = 1.0;
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int bit = (corner >> i) & 1;
            const auto ii = static_cast<std::size_t>(i);
            const int cells = geometry_.shape()[ii];
            w *= bit ? frac[ii] : 1.0 - frac[ii];
            int k = base[ii] + bit;
            k = geometry_.periodic() ? ((k % cells) + cells) % cells : std::min(k, cells - 1);
            idx[ii] = k;
        }
        if (w != 0.0) {
            out += w * value(geometry_.flat_index(idx));
        }
    }
    return out;
}

GridField& GridField::operator+=(const GridField& other)
{
    if (!(other.geometry_ == geometry_) || other.dim_ != dim_) {
        throw InputError("grid fields live on different grids");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

GridField& GridField::operator-=(const GridField& other)
{
    if (!(other.geometry_ == geometry_) || other.dim_ != dim_) {
        throw InputError("grid fields live on different grids");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

GridField& GridField::operator*=(double s)
{
    for (double& x : data_) {
        x *= s;
    }
    return *this;
}

GridField GridField::transformed(const Eigen::MatrixXd& l) const
{
    if (l.cols() != dim_) {
        throw InputError("transformed: matrix has wrong number of columns");
    }
    GridField out(geometry_, static_cast<int>(l.rows()));
    for (std::size_t p = 0; p < points(); ++p) {
        out.value(p) = l * value(p);
    }
    return out;
}

GridField GridField::shifted(int axis, int cells) const
{
    if (!geometry_.periodic()) {
        throw InputError("shifted: only periodic grids can be shifted");
    }
    GridField out(geometry_, dim_);
    for (std::size_t p = 0; p < points(); ++p) {
        out.value(geometry_.neighbor(p, axis, cells)) = value(p);
    }
    return out;
}

double GridField::max_abs() const
{
    double m = 0.0;
    for (double x : data_) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double GridField::rms() const
{
    double s = 0.0;
    for (double x : data_) {
        s += x * x;
    }
    return std::sqrt(s / static_cast<double>(points()));
}

double finite_difference(const GridField& u, std::size_t point, int component, int axis)
{
    const auto& g = u.geometry();
    const double h = g.spacing(axis);
    const std::size_t end = g.size();
    const std::size_t fwd = g.neighbor(point, axis, 1);
    const std::size_t bwd = g.neighbor(point, axis, -1);
    if (fwd != end && bwd != end) {
        return (u.at(fwd, component) - u.at(bwd, component)) / (2.0 * h);
    }
    if (g.shape()[static_cast<std::size_t>(axis)] < 3) {
        throw ResolutionError("finite differences need at least 3 cells per axis");
    }
    if (bwd == end) {
        const std::size_t fwd2 = g.neighbor(point, axis, 2);
        return (-3.0 * u.at(point, component) + 4.0 * u.at(fwd, component) - u.at(fwd2, component)) / (2.0 * h);
    }
    const std::size_t bwd2 = g.neighbor(point, axis, -2);
    return (3.0 * u.at(point, component) - 4.0 * u.at(bwd, component) + u.at(bwd2, component)) / (2.0 * h);
}

Eigen::MatrixXd finite_difference_gradient(const GridField& u, std::size_t point)
{
    const int n = u.geometry().n();
    Eigen::MatrixXd m(u.dim(), n);
    for (int c = 0; c < u.dim(); ++c) {
        for (int j = 0; j < n; ++j) {
            m(c, j) = finite_difference(u, point, c, j);
        }
    }
    return m;
}

GridField apply_operator_fd(const Operator& op, const GridField& u)
{
    if (u.geometry().n() != op.n() || u.dim() != op.dim_v()) {
        throw InputError("apply_operator_fd: field shape does not match the operator");
    }
    GridField out(u.geometry(), op.dim_w());
    for (std::size_t p = 0; p < u.points(); ++p) {
        out.value(p) = op.apply_to_gradient(finite_difference_gradient(u, p));
    }
    return out;
}

namespace {

constexpr char grid_magic[8] = {'B', 'V', 'G', 'R', 'I', 'D', '0', '1'};

template <class T>
void put(std::ostream& out, T value)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in)
{
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw ConfigError("grid file: unexpected end of data");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_grid_binary(const GridField& u, std::ostream& out)
{
    const auto& g = u.geometry();
    out.write(grid_magic, sizeof grid_magic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(u.dim()));
    put<std::uint32_t>(out, g.periodic() ? 1U : 0U);
    put<std::uint32_t>(out, 0U);
    for (int cells : g.shape()) {
        put<std::uint64_t>(out, static_cast<std::uint64_t>(cells));
    }
    for (int i = 0; i < g.n(); ++i) {
        put<double>(out, g.lo()(i));
    }
    for (int i = 0; i < g.n(); ++i) {
        put<double>(out, g.hi()(i));
    }
    for (double x : u.data()) {
        put<double>(out, x);
    }
}

void write_grid_binary(const GridField& u, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    write_grid_binary(u, out);
}

GridField read_grid_binary(std::istream& in)
{
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, grid_magic, sizeof magic) != 0) {
        throw ConfigError("grid file: bad magic");
    }
    const auto n = get<std::uint32_t>(in);
    const auto dim = get<std::uint32_t>(in);
    const auto periodic = get<std::uint32_t>(in);
    get<std::uint32_t>(in);
    if (n == 0 || n > 16 || dim == 0) {
        throw ConfigError("grid file: implausible header");
    }
    std::vector<int> shape(n);
    for (auto& cells : shape) {
        cells = static_cast<int>(get<std::uint64_t>(in));
    }
    Eigen::VectorXd lo(n), hi(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        lo(i) = get<double>(in);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        hi(i) = get<double>(in);
    }
    GridField u(GridGeometry(shape, lo, hi, periodic != 0), static_cast<int>(dim));
    for (double& x : u.data()) {
        x = get<double>(in);
    }
    return u;
}

GridField read_grid_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    return read_grid_binary(in);
}

void write_grid_csv(const GridField& u, std::ostream& out)
{
    const int n = u.geometry().n();
    for (int i = 0; i < n; ++i) {
        out << (i ? "," : "") << 'x' << i;
    }
    for (int c = 0; c < u.dim(); ++c) {
        out << ",u" << c;
    }
    out << '\n' << std::setprecision(17);
    for (std::size_t p = 0; p < u.points(); ++p) {
        const Eigen::VectorXd x = u.geometry().position(p);
        for (int i = 0; i < n; ++i) {
            out << (i ? "," : "") << x(i);
        }
        for (int c = 0; c < u.dim(); ++c) {
            out << ',' << u.at(p, c);
        }
        out << '\n';
    }
}

} // namespace bvlab
