#pragma once

/*
 * L^p-differentiability experiments.
 *
 * u is L^p-differentiable at x when the excess
 *
 *     E_p(x, r) = ( mean_{B_r(x)} |u(y) - u(x) - M (y - x)|^p )^{1/p}
 *
 * is o(r) for some matrix M. Numerically M comes from a least-squares affine
 * fit on a small ball, E_p is evaluated on dyadic radii and the decay rate is
 * the slope beta of log E_p against log r; beta > 1 is read as o(r).
 */

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/fieldgen.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/inequality.hpp"
#include "bvlab/measure.hpp"
#include "json.hpp"

namespace bvlab {

struct ApproxGradient {
    Eigen::VectorXd x;
    Eigen::VectorXd value;   ///< constant term of the fit
    Eigen::MatrixXd m;       ///< dimV x n
    double fit_radius = 0.0;
    double residual = 0.0;   ///< rms misfit over the fit ball
    double relative_residual = 0.0; ///< residual / rms |u - mean u| on the fit ball
    double optimality = 0.0; ///< relative normal-equation residual of the fit
    bool flagged = false;    ///< relative residual above 5%: no affine behaviour at x
};

/// Least-squares affine fit of u over the cells of B_{r_fit}(x). Throws
/// ResolutionError below 8 cells per diameter.
ApproxGradient approx_gradient(const GridField& u, const Eigen::VectorXd& x, double r_fit);

/// Least-squares slope of log y against log x; values below `floor` are
/// clamped to it. +inf when every value is at the floor.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor);

struct ExcessReport {
    Eigen::VectorXd x;
    double p = 1.0;
    std::vector<double> radii; ///< strictly decreasing
    std::vector<double> excess;
    double beta = 0.0;
    bool differentiable = false; ///< beta > 1

    nlohmann::json to_json() const;
};

/// E_p(x, r) for every radius by cell quadrature (8 cells per diameter at
/// least) and the fitted slope. Needs >= 4 strictly decreasing radii and p >= 1.
ExcessReport excess(const GridField& u, const Eigen::VectorXd& x, const Eigen::MatrixXd& m,
                    const Eigen::VectorXd& u_at_x, double p, const std::vector<double>& radii);

/// r_k = r0 2^{-k}, k = 0..count-1, with r0 = (shortest box side) / 8 unless
/// given, keeping radii with at least 8 cells per diameter. Throws
/// ResolutionError when fewer than 4 remain.
std::vector<double> dyadic_radii(const GridGeometry& g, double r0 = 0.0, int count = 6);

enum class SampleVariant { Interior, Blind, Interface };

std::string to_string(SampleVariant v);

/// Grid points for the rate experiments, with room for a ball of radius
/// `margin` inside a box grid. Interior points keep more than
/// `exclusion_cells` cells away from every singular piece; interface points
/// are the grid points nearest to random points on the pieces where the
/// jump density is at least half its largest value on that piece, more than
/// `exclusion_cells` cells away from every other piece.
std::vector<std::size_t> sample_points(const GridGeometry& g, const MeasureField& mu, int count, std::uint64_t seed,
                                       SampleVariant variant, double margin, double exclusion_cells = 4.0);

struct DecompositionRow {
    double r = 0.0;
    double total = 0.0;        ///< (mean |v|^{1*})^{1/1*}
    double poincare = 0.0;     ///< (mean |v - pi v|^{1*})^{1/1*}
    double i_r = 0.0;          ///< r |A v|(closed B_r) / |B_r|
    double ii_r = 0.0;         ///< (mean |pi v|^{1*})^{1/1*}
    double mean_v = 0.0;       ///< mean |v|
    double mean_pi_v = 0.0;    ///< mean |pi v|
    double constant = 0.0;     ///< empirical Poincare constant used in the bound
    bool touches_boundary = false;
    bool triangle_holds = false;
    bool bound_holds = false;  ///< total <= constant I_r + II_r
};

/// v = u - u(x) - M (. - x) on B_r(x), A v = mu - A(M) L^n.
DecompositionRow excess_decomposition(const PoincareSobolev& ps, const GridField& u, const MeasureField& mu,
                                      const Eigen::VectorXd& x, const Eigen::MatrixXd& m,
                                      const Eigen::VectorXd& u_at_x, double r, double constant);

struct RateConfig {
    std::vector<double> exponents;   ///< empty: only the critical n/(n-1)
    std::vector<double> radii;       ///< empty: dyadic_radii(grid)
    double fit_cells = 4.0;          ///< fit radius in cells
    bool decomposition = false;
    double constant = 0.0;           ///< Poincare constant for the decomposition
};

struct PointReport {
    std::size_t grid_point = 0;
    Eigen::VectorXd x;
    std::string label;
    ApproxGradient gradient;
    std::vector<ExcessReport> excess; ///< one per exponent
    std::vector<DecompositionRow> decomposition;
};

struct RateTable {
    double critical_exponent = 0.0;
    std::vector<double> exponents;
    std::vector<double> radii;
    std::vector<PointReport> points;

    /// Fraction of points with beta > 1 at exponent p.
    double pass_fraction(double p) const;
    double median_beta(double p) const;
    /// Every point that passes at p also passes at all smaller tested exponents.
    bool verdicts_monotone() const;
};

RateTable critical_rate_experiment(const PoincareSobolev& ps, const RealizedField& field,
                                   const std::vector<std::size_t>& points, const RateConfig& cfg,
                                   const std::string& label = "interior");

struct StructurePoint {
    Eigen::VectorXd x;
    Eigen::VectorXd fitted;  ///< A(M)
    Eigen::VectorXd density; ///< AC density of mu at x
    double deviation = 0.0;
};

struct StructureReport {
    std::vector<StructurePoint> points;
    double max_relative_deviation = 0.0;
};

/// Compares A(M), M the fitted approximate gradient, with the AC density;
/// deviations are relative to max(|density(x)|, rms density over the grid).
StructureReport structure_identity_check(const Operator& op, const GridField& u, const MeasureField& mu,
                                         const std::vector<std::size_t>& points, double fit_cells = 4.0);

struct MollifierConvergence {
    std::vector<double> eps;
    std::vector<double> errors; ///< |grad u_eps(x) - M|
    double slope = 0.0;
    bool decreasing = false;
};

/// grad(u * eta_eps)(x) by centred differences of the mollified field,
/// compared with M for every eps.
MollifierConvergence mollified_gradient_convergence(const GridField& u, std::size_t point, const Eigen::MatrixXd& m,
                                                    const std::vector<double>& eps_list);

} // namespace bvlab
