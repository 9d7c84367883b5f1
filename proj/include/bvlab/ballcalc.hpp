#pragma once

/*
 * Integration over balls and the L2 projection onto the (polynomial)
 * null-space of an FDN operator.
 *
 * Two quadratures are supported. Exact moments integrate polynomials over
 * B_r(x) in closed form. Cell quadrature uses the grid cells whose centres
 * lie in the closed ball, all with the same weight, scaled so that the
 * weights add up to the exact ball volume; cell means are therefore plain
 * averages over the included cells.
 *
 * A ProjectionBasis orthonormalized under cell quadrature reproduces
 * sampled null-space elements exactly, which is what the inequality and
 * excess experiments need. The exact-moment variant is the reference for
 * polynomial inputs.
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/grid.hpp"
#include "bvlab/polynomial.hpp"

namespace bvlab {

class Operator;

class Ball {
public:
    Ball(Eigen::VectorXd center, double radius);

    int n() const { return static_cast<int>(center_.size()); }
    const Eigen::VectorXd& center() const { return center_; }
    double radius() const { return radius_; }
    double volume() const;
    bool contains(const Eigen::VectorXd& x) const; ///< closed ball

    /// Image of the unit ball point z: center + radius * z.
    Eigen::VectorXd from_unit(const Eigen::VectorXd& z) const { return center_ + radius_ * z; }
    Eigen::VectorXd to_unit(const Eigen::VectorXd& y) const { return (y - center_) / radius_; }

private:
    Eigen::VectorXd center_;
    double radius_;
};

double ball_volume(int n, double radius);

/// Exact integral of (y - center)^alpha over the ball.
double ball_monomial_moment(int n, const MultiIndex& alpha, const Ball& ball);

/// Exact L2(ball) inner product of two polynomial fields of equal shape.
double l2_inner(const PolynomialField& p, const PolynomialField& q, const Ball& ball);

/// q(y) = p((y - c) / r): the pushforward of a unit-ball polynomial to B_r(c).
PolynomialField push_forward(const PolynomialField& p, const Ball& ball);

class BallCells {
public:
    /// Cells of a grid whose centres lie in the closed ball. Throws
    /// ResolutionError below min_cells_per_diameter and InputError when the
    /// ball leaves a non-periodic box.
    static BallCells from_grid(const GridGeometry& geometry, const Ball& ball, double min_cells_per_diameter = 8.0);

    /// Ball-local grid with `cells_per_diameter` cells across the bounding cube.
    static BallCells local(const Ball& ball, int cells_per_diameter);

    const Ball& ball() const { return ball_; }
    std::size_t size() const { return points_.size(); }
    /// Positions, unwrapped on periodic grids (they lie in the ball).
    const std::vector<Eigen::VectorXd>& points() const { return points_; }
    /// Grid indices (empty for a local quadrature).
    const std::vector<std::size_t>& grid_points() const { return grid_points_; }
    double weight() const { return weight_; }
    double spacing() const { return spacing_; }

    template <class F>
    double mean(F&& f) const
    {
        double s = 0.0;
        for (std::size_t q = 0; q < points_.size(); ++q) {
            s += f(q);
        }
        return s / static_cast<double>(points_.size());
    }

private:
    BallCells(Ball ball, std::vector<Eigen::VectorXd> points, std::vector<std::size_t> grid_points, double spacing);

    Ball ball_;
    std::vector<Eigen::VectorXd> points_;
    std::vector<std::size_t> grid_points_;
    double weight_;
    double spacing_;
};

/// Samples points in the closed ball suited to estimating a supremum:
/// the quadrature cell centres plus a dense set on the bounding sphere.
std::vector<Eigen::VectorXd> sup_sample_points(const BallCells& cells);

struct ProjectionBasis {
    enum class Quadrature { Exact, Cells };

    Ball ball;
    std::vector<PolynomialField> elements;
    double gram_conditioning = 1.0;
    Quadrature quadrature = Quadrature::Exact;
    std::shared_ptr<const BallCells> cells; ///< set for Quadrature::Cells
};

/// Symmetric (Loewdin) orthonormalization e = p G^{-1/2}, with G the Gram
/// matrix from exact moments. Throws DegenerateInputError when G is singular.
ProjectionBasis orthonormalize(const std::vector<PolynomialField>& basis, const Ball& ball);

/// Same, with G assembled by cell quadrature.
ProjectionBasis orthonormalize(const std::vector<PolynomialField>& basis, const BallCells& cells);

/// Inner products <v, e_j> (exact, or by the basis' cell quadrature).
Eigen::VectorXd projection_coefficients(const PolynomialField& v, const ProjectionBasis& pb);
PolynomialField l2_project(const PolynomialField& v, const ProjectionBasis& pb);

/// Projection of a grid field; inner products by cell quadrature over
/// `cells`, which must come from the grid of v.
Eigen::VectorXd projection_coefficients(const GridField& v, const ProjectionBasis& pb, const BallCells& cells);
PolynomialField l2_project(const GridField& v, const ProjectionBasis& pb, const BallCells& cells);
/// Builds the cells itself with the 8-cells-per-diameter floor.
PolynomialField l2_project(const GridField& v, const ProjectionBasis& pb);

PolynomialField combine(const ProjectionBasis& pb, const Eigen::VectorXd& coefficients);

/// Precomputed basis values on a set of cells: projection of sampled values
/// in O(cells * dim * basis) without polynomial evaluation.
class CellProjector {
public:
    CellProjector(const ProjectionBasis& pb, const BallCells& cells);

    int dim() const { return dim_; }
    std::size_t cells() const { return cells_; }

    /// values: cells x dim, row q holds the sample at cell q.
    Eigen::VectorXd coefficients(const Eigen::MatrixXd& values) const;
    Eigen::MatrixXd project(const Eigen::MatrixXd& values) const;

private:
    int dim_;
    std::size_t cells_;
    double weight_;
    std::vector<Eigen::MatrixXd> basis_values_; ///< per element, cells x dim
};

using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct StabilityReport {
    double constant = 0.0;        ///< max over trials of mean|pi v| / mean|v|
    std::vector<double> ratios;   ///< one per trial; NaN when mean|v| = 0
    double sup_bound = 0.0;       ///< max_j sup_B |e_j|
    double scaled_sup_bound = 0.0;///< sup_bound * r^{n/2}
    double gram_conditioning = 1.0;
};

/// Empirical constant of the L1 stability of the projection on `ball`.
/// Trials are given in unit-ball coordinates and pushed forward to the ball;
/// the null-space basis is pushed forward the same way. Requires FDN.
StabilityReport projection_stability_constant(const Operator& op, const Ball& ball,
                                              const std::vector<VectorFunction>& unit_trials,
                                              int cells_per_diameter = 64, int degree_cap = 8);

/// sup_B |P| / mean_B |P| for one polynomial field.
double norm_equivalence_ratio(const PolynomialField& p, const Ball& ball, int cells_per_diameter = 64);

struct NormEquivalenceReport {
    double constant = 0.0;
    std::vector<double> per_ball;
};

/// Max over random scalar polynomials of degree <= l (unit-ball
/// coordinates, pushed forward to every ball) of sup|P| / mean|P|.
NormEquivalenceReport polynomial_norm_equivalence_constant(int l, int n, const std::vector<Ball>& balls, int trials,
                                                           std::uint64_t seed = 1, int cells_per_diameter = 64);

} // namespace bvlab
