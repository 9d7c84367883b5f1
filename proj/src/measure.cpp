#include "bvlab/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bvlab/errors.hpp"

namespace bvlab {

namespace {

// 8-point Gauss-Legendre on [-1, 1]
constexpr std::array<double, 8> gl_nodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> gl_weights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

constexpr int segment_panels = 32;

template <class F>
double integrate_segment(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double t0, double t1, F&& f)
{
    const double length = (b - a).norm();
    const double dt = (t1 - t0) / segment_panels;
    double s = 0.0;
    for (int k = 0; k < segment_panels; ++k) {
        const double mid = t0 + (k + 0.5) * dt;
        for (std::size_t g = 0; g < gl_nodes.size(); ++g) {
            const double t = mid + 0.5 * dt * gl_nodes[g];
            s += gl_weights[g] * 0.5 * dt * f(a + t * (b - a));
        }
    }
    return s * length;
}

struct SubTriangle {
    Eigen::VectorXd centroid;
    double area;
};

// Uniform subdivision of triangle (p0, p1, p2) into m^2 congruent pieces.
template <class F>
void subdivide(const Eigen::VectorXd& p0, const Eigen::VectorXd& p1, const Eigen::VectorXd& p2, int m, F&& visit)
{
    const Eigen::VectorXd e1 = (p1 - p0) / m;
    const Eigen::VectorXd e2 = (p2 - p0) / m;
    const double area = 0.5 * std::sqrt(std::max(0.0, e1.squaredNorm() * e2.squaredNorm() - std::pow(e1.dot(e2), 2)));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j + i < m; ++j) {
            const Eigen::VectorXd base = p0 + i * e1 + j * e2;
            visit(SubTriangle{base + (e1 + e2) / 3.0, area});
            if (i + j + 1 < m) {
                visit(SubTriangle{base + 2.0 * (e1 + e2) / 3.0, area});
            }
        }
    }
}

template <class F>
void visit_polygon(const SingularPiece& piece, int m, F&& visit)
{
    const auto& v = piece.vertices;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        subdivide(v[0], v[k], v[k + 1], m, visit);
    }
}

void check_piece(const SingularPiece& piece)
{
    const auto n = piece.normal.size();
    if (n == 2 && piece.vertices.size() != 2) {
        throw InputError("a planar interface piece is a segment with two endpoints");
    }
    if (n == 3 && piece.vertices.size() < 3) {
        throw InputError("a spatial interface piece needs at least three vertices");
    }
    if (n != 2 && n != 3) {
        throw InputError("interface pieces are supported for n = 2 and n = 3");
    }
}

double point_segment_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x)
{
    const Eigen::VectorXd d = b - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (a + t * d - x).norm();
}

} // namespace

double SingularPiece::measure() const
{
    check_piece(*this);
    if (vertices.size() == 2) {
        return (vertices[1] - vertices[0]).norm();
    }
    double area = 0.0;
    for (std::size_t k = 1; k + 1 < vertices.size(); ++k) {
        const Eigen::Vector3d e1 = vertices[k] - vertices[0];
        const Eigen::Vector3d e2 = vertices[k + 1] - vertices[0];
        area += 0.5 * e1.cross(e2).norm();
    }
    return area;
}

PieceVariation piece_variation(const SingularPiece& piece, const Ball& ball)
{
    check_piece(piece);
    const Eigen::VectorXd& c = ball.center();
    const double r = ball.radius();
    PieceVariation out;
    if (piece.vertices.size() == 2) {
        const Eigen::VectorXd& a = piece.vertices[0];
        const Eigen::VectorXd& b = piece.vertices[1];
        const Eigen::VectorXd d = b - a;
        const double qa = d.squaredNorm();
        const double qb = 2.0 * d.dot(a - c);
        const double qc = (a - c).squaredNorm() - r * r;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (qa == 0.0 || disc < 0.0) {
            return out;
        }
        const double s0 = (-qb - std::sqrt(disc)) / (2.0 * qa);
        const double s1 = (-qb + std::sqrt(disc)) / (2.0 * qa);
        const double t0 = std::max(0.0, s0);
        const double t1 = std::min(1.0, s1);
        if (t1 < t0) {
            return out;
        }
        out.touches_boundary = (s0 >= 0.0 && s0 <= 1.0) || (s1 >= 0.0 && s1 <= 1.0);
        if (t1 > t0) {
            out.value = integrate_segment(a, b, t0, t1, [&](const Eigen::VectorXd& y) { return piece.density(y).norm(); });
        }
        return out;
    }
    const Eigen::VectorXd nu = piece.normal.normalized();
    const double dist = (c - piece.vertices[0]).dot(nu);
    if (std::abs(dist) > r) {
        return out;
    }
    const Eigen::VectorXd disc_center = c - dist * nu;
    const double rho2 = r * r - dist * dist;
    bool inside = false;
    bool outside = false;
    visit_polygon(piece, 96, [&](const SubTriangle& t) {
        if ((t.centroid - disc_center).squaredNorm() <= rho2) {
            inside = true;
            out.value += t.area * piece.density(t.centroid).norm();
        } else {
            outside = true;
        }
    });
    out.touches_boundary = inside && outside;
    return out;
}

double piece_pairing(const SingularPiece& piece, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& phi)
{
    check_piece(piece);
    const auto integrand = [&](const Eigen::VectorXd& y) { return phi(y).dot(piece.density(y)); };
    if (piece.vertices.size() == 2) {
        return integrate_segment(piece.vertices[0], piece.vertices[1], 0.0, 1.0, integrand);
    }
    double s = 0.0;
    visit_polygon(piece, 96, [&](const SubTriangle& t) { s += t.area * integrand(t.centroid); });
    return s;
}

std::vector<std::pair<Eigen::VectorXd, double>> piece_nodes(const SingularPiece& piece, double h)
{
    check_piece(piece);
    std::vector<std::pair<Eigen::VectorXd, double>> nodes;
    if (piece.vertices.size() == 2) {
        const Eigen::VectorXd& a = piece.vertices[0];
        const Eigen::VectorXd& b = piece.vertices[1];
        const double length = (b - a).norm();
        const int panels = std::max(1, static_cast<int>(std::ceil(length / h)));
        for (int k = 0; k < panels; ++k) {
            for (double g : {-0.5773502691896258, 0.5773502691896258}) {
                const double t = (k + 0.5 + 0.5 * g) / panels;
                nodes.emplace_back(a + t * (b - a), 0.5 * length / panels);
            }
        }
        return nodes;
    }
    double diameter = 0.0;
    for (const auto& p : piece.vertices) {
        for (const auto& q : piece.vertices) {
            diameter = std::max(diameter, (p - q).norm());
        }
    }
    const int m = std::max(1, static_cast<int>(std::ceil(diameter / h)));
    visit_polygon(piece, m, [&](const SubTriangle& t) { nodes.emplace_back(t.centroid, t.area); });
    return nodes;
}

double distance_to_piece(const SingularPiece& piece, const Eigen::VectorXd& x)
{
    check_piece(piece);
    const auto& v = piece.vertices;
    if (v.size() == 2) {
        return point_segment_distance(v[0], v[1], x);
    }
    const Eigen::Vector3d nu = piece.normal.normalized();
    const Eigen::Vector3d y = x;
    const double dist = (y - Eigen::Vector3d(v[0])).dot(nu);
    const Eigen::Vector3d proj = y - dist * nu;
    bool inside = true;
    double sign = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const Eigen::Vector3d p = v[k];
        const Eigen::Vector3d q = v[(k + 1) % v.size()];
        const double s = (q - p).cross(proj - p).dot(nu);
        if (sign == 0.0) {
            sign = s;
        } else if (s * sign < 0.0) {
            inside = false;
        }
    }
    if (inside) {
        return std::abs(dist);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < v.size(); ++k) {
        best = std::min(best, point_segment_distance(v[k], v[(k + 1) % v.size()], x));
    }
    return best;
}

MeasureField::MeasureField(GridField ac_density, std::vector<SingularPiece> singular)
    : ac_(std::move(ac_density)), singular_(std::move(singular))
{
    for (const auto& p : singular_) {
        check_piece(p);
        if (p.density.value_dim() != ac_.dim() || p.normal.size() != ac_.geometry().n()) {
            throw InputError("singular piece does not match the AC density shape");
        }
    }
}

Variation MeasureField::total_variation(const BallCells& cells, const Eigen::VectorXd* ac_offset) const
{
    if (cells.grid_points().size() != cells.size()) {
        throw InputError("total variation needs grid-based cells");
    }
    Variation tv;
    for (std::size_t q = 0; q < cells.size(); ++q) {
        const auto value = ac_.value(cells.grid_points()[q]);
        tv.absolutely_continuous += ac_offset ? (value - *ac_offset).norm() : value.norm();
    }
    tv.absolutely_continuous *= cells.weight();
    for (const auto& piece : singular_) {
        const auto pv = piece_variation(piece, cells.ball());
        tv.singular += pv.value;
        tv.touches_boundary = tv.touches_boundary || pv.touches_boundary;
    }
    return tv;
}

Variation MeasureField::total_variation(const Ball& ball, double min_cells_per_diameter) const
{
    return total_variation(BallCells::from_grid(ac_.geometry(), ball, min_cells_per_diameter));
}

double MeasureField::distance_to_singular(const Eigen::VectorXd& x) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : singular_) {
        best = std::min(best, distance_to_piece(piece, x));
    }
    return best;
}

MeasureField& MeasureField::operator+=(const MeasureField& other)
{
    ac_ += other.ac_;
    singular_.insert(singular_.end(), other.singular_.begin(), other.singular_.end());
    return *this;
}

} // namespace bvlab
