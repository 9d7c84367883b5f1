#pragma once

/*
 * Poincare-Sobolev inequality modulo the null-space,
 *
 *     ( mean_B |u - pi_B u|^{n/(n-1)} )^{(n-1)/n}  <=  c r mean_B |A u|,
 *
 * and its measure form with r^{1-n} |A u|(closed B) on the right. pi_B is
 * the L2 projection onto ker A restricted to the ball, which only exists
 * as a finite-dimensional object when A has finite-dimensional null-space.
 */

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bvlab/ballcalc.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measure.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "json.hpp"

namespace bvlab {

struct RatioReport {
    double lhs = 0.0;
    double rhs = 0.0;
    /// lhs / rhs; NaN for the degenerate 0/0 outcome, +inf when only rhs vanishes.
    double ratio = std::numeric_limits<double>::quiet_NaN();
    /// u is (numerically) a null-space element on the ball: lhs = rhs = 0.
    bool degenerate = false;
    /// Some singular piece meets the bounding sphere (measure form only).
    bool touches_boundary = false;
    std::string field;
    Eigen::VectorXd center;
    double radius = 0.0;

    nlohmann::json to_json() const;
};

class PoincareSobolev {
public:
    /// Throws PreconditionError unless op has finite-dimensional null-space
    /// (with kernel found below degree_cap) and n >= 2.
    explicit PoincareSobolev(Operator op, int degree_cap = 8);

    const Operator& op() const { return op_; }
    const NullspaceReport& nullspace() const { return report_; }
    const std::vector<PolynomialField>& kernel() const { return kernel_; }
    /// n / (n - 1)
    double exponent() const;

    /// Null-space basis pushed forward to the ball and orthonormalized by
    /// the cell quadrature of `cells`.
    ProjectionBasis basis(const BallCells& cells) const;

    /// (mean |u - pi u|^{n/(n-1)})^{(n-1)/n} over the cells (grid-based).
    double lhs(const GridField& u, const BallCells& cells) const;

    /// Smooth form; A u by centred finite differences. Needs 16 cells per
    /// ball diameter.
    RatioReport ratio(const GridField& u, const Ball& ball, std::string field = {}) const;

    /// Measure form: rhs = r^{1-n} |mu|(closed ball).
    RatioReport ratio_measure(const MeasureField& mu, const GridField& u, const Ball& ball,
                              std::string field = {}) const;

    /// Ratio against r |mu|(closed ball) / |B_r|, the measure analogue of the
    /// smooth form's normalization (the two agree on absolutely continuous mu).
    RatioReport ratio_mean_measure(const MeasureField& mu, const GridField& u, const Ball& ball,
                                   std::string field = {}) const;

private:
    RatioReport finish(double lhs, double rhs, double scale, std::string field, const Ball& ball) const;

    Operator op_;
    NullspaceReport report_;
    std::vector<PolynomialField> kernel_;
};

struct SharpConstantConfig {
    int trials = 16;
    int refine_steps = 40;
    std::uint64_t seed = 1;
    int max_band = 3;
    int cells_per_diameter = 32;
    bool include_piecewise = true;
};

struct SharpConstantEstimate {
    /// Largest ratio found, in the mean normalization (ratio_mean_measure).
    double constant = 0.0;
    /// Best value after each trial (nondecreasing).
    std::vector<double> running_max;
    /// Description of the maximizing field.
    nlohmann::json argmax;
};

/// Empirical best constant: random band-limited and piecewise-kernel trial
/// fields on a ball-local grid, each improved by coordinate-wise hill
/// climbing (step halved after 10 consecutive rejections). Trial t depends
/// only on (seed, t), so the running max is nondecreasing in trials.
/// Throws InputError for trials < 1.
SharpConstantEstimate estimate_sharp_constant(const PoincareSobolev& ps, const Ball& ball,
                                              const SharpConstantConfig& cfg = {});

} // namespace bvlab
