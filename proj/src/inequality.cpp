#include "bvlab/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "bvlab/errors.hpp"
#include "bvlab/fieldgen.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

namespace {

Eigen::MatrixXd cell_values(const GridField& u, const BallCells& cells)
{
    Eigen::MatrixXd values(static_cast<Eigen::Index>(cells.size()), u.dim());
    for (std::size_t q = 0; q < cells.size(); ++q) {
        values.row(static_cast<Eigen::Index>(q)) = u.value(cells.grid_points()[q]).transpose();
    }
    return values;
}

double rms_on(const Eigen::MatrixXd& values)
{
    return values.rows() > 0 ? std::sqrt(values.rowwise().squaredNorm().mean()) : 0.0;
}

void check_same_grid(const GridField& u, const BallCells& cells)
{
    if (cells.grid_points().size() != cells.size()) {
        throw InputError("cells must come from the grid of the field");
    }
    for (const auto p : cells.grid_points()) {
        if (p >= u.points()) {
            throw InputError("cells do not belong to the grid of the field");
        }
    }
}

} // namespace

nlohmann::json RatioReport::to_json() const
{
    nlohmann::json j{{"lhs", lhs},
                     {"rhs", rhs},
                     {"degenerate", degenerate},
                     {"touchesBoundary", touches_boundary},
                     {"field", field},
                     {"center", std::vector<double>(center.data(), center.data() + center.size())},
                     {"radius", radius}};
    j["ratio"] = std::isfinite(ratio) ? nlohmann::json(ratio) : nlohmann::json(nullptr);
    return j;
}

PoincareSobolev::PoincareSobolev(Operator op, int degree_cap)
    : op_(std::move(op)), report_(fdn_report(op_, degree_cap))
{
    if (!report_.fdn) {
        throw PreconditionError("operator '" + op_.name() + "' has no finite-dimensional null-space (" +
                                report_.verdict() + "); the projection onto the null-space does not exist");
    }
    if (op_.n() < 2) {
        throw PreconditionError("the Sobolev exponent n/(n-1) needs n >= 2");
    }
    kernel_ = kernel_basis(op_, report_);
}

double PoincareSobolev::exponent() const { return static_cast<double>(op_.n()) / (op_.n() - 1); }

ProjectionBasis PoincareSobolev::basis(const BallCells& cells) const
{
    std::vector<PolynomialField> pushed;
    pushed.reserve(kernel_.size());
    for (const auto& p : kernel_) {
        pushed.push_back(push_forward(p, cells.ball()));
    }
    return orthonormalize(pushed, cells);
}

double PoincareSobolev::lhs(const GridField& u, const BallCells& cells) const
{
    check_same_grid(u, cells);
    const Eigen::MatrixXd values = cell_values(u, cells);
    const CellProjector projector(basis(cells), cells);
    const Eigen::MatrixXd residual = values - projector.project(values);
    const double q = exponent();
    return std::pow(residual.rowwise().norm().array().pow(q).mean(), 1.0 / q);
}

RatioReport PoincareSobolev::finish(double lhs, double rhs, double scale, std::string field, const Ball& ball) const
{
    RatioReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.field = std::move(field);
    rep.center = ball.center();
    rep.radius = ball.radius();
    const double floor = 1e-9 * std::max(scale, std::numeric_limits<double>::min());
    if (rhs <= floor && lhs <= floor) {
        rep.degenerate = true;
        rep.ratio = std::numeric_limits<double>::quiet_NaN();
    } else if (rhs <= 0.0) {
        rep.ratio = std::numeric_limits<double>::infinity();
    } else {
        rep.ratio = lhs / rhs;
    }
    return rep;
}

RatioReport PoincareSobolev::ratio(const GridField& u, const Ball& ball, std::string field) const
{
    if (u.dim() != op_.dim_v() || u.geometry().n() != op_.n()) {
        throw InputError("field does not match the operator shape");
    }
    const BallCells cells = BallCells::from_grid(u.geometry(), ball, 16.0);
    const Eigen::MatrixXd values = cell_values(u, cells);
    double mean_au = 0.0;
    for (const auto p : cells.grid_points()) {
        mean_au += op_.apply_to_gradient(finite_difference_gradient(u, p)).norm();
    }
    mean_au /= static_cast<double>(cells.size());
    return finish(lhs(u, cells), ball.radius() * mean_au, rms_on(values), std::move(field), ball);
}

RatioReport PoincareSobolev::ratio_measure(const MeasureField& mu, const GridField& u, const Ball& ball,
                                           std::string field) const
{
    RatioReport rep = ratio_mean_measure(mu, u, ball, std::move(field));
    // r |mu| / |B_r| = r^{1-n} |mu| / |B_1|
    const double unit_volume = ball_volume(ball.n(), 1.0);
    rep.rhs *= unit_volume;
    if (!rep.degenerate) {
        rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : std::numeric_limits<double>::infinity();
    }
    return rep;
}

RatioReport PoincareSobolev::ratio_mean_measure(const MeasureField& mu, const GridField& u, const Ball& ball,
                                                std::string field) const
{
    if (u.dim() != op_.dim_v() || mu.dim() != op_.dim_w() || u.geometry().n() != op_.n()) {
        throw InputError("field or measure does not match the operator shape");
    }
    const BallCells cells = BallCells::from_grid(u.geometry(), ball, 8.0);
    const Variation tv = mu.total_variation(ball, 8.0);
    const Eigen::MatrixXd values = cell_values(u, cells);
    RatioReport rep =
        finish(lhs(u, cells), ball.radius() * tv.total() / ball.volume(), rms_on(values), std::move(field), ball);
    rep.touches_boundary = tv.touches_boundary;
    return rep;
}

namespace {

struct TrialResult {
    double ratio = -std::numeric_limits<double>::infinity();
    nlohmann::json descriptor;
};

class TrialContext {
public:
    // The ratio is translation invariant, so trials live on the ball moved to
    // the origin: pushing kernel elements to a far-off small ball would make
    // their monomial coefficients large and the projection ill-conditioned.
    TrialContext(const PoincareSobolev& ps, const Ball& ball, int cpd)
        : ps_(ps), ball_(Eigen::VectorXd::Zero(ball.n()), ball.radius()), geometry_(make_grid(ball_, cpd))
    {
        for (const auto& p : ps.kernel()) {
            kernel_.push_back(push_forward(p, ball_));
        }
    }

    const GridGeometry& geometry() const { return geometry_; }
    const std::vector<PolynomialField>& kernel() const { return kernel_; }

    double evaluate(const GridField& u, const MeasureField& mu) const
    {
        const auto rep = ps_.ratio_mean_measure(mu, u, ball_);
        return std::isfinite(rep.ratio) ? rep.ratio : -std::numeric_limits<double>::infinity();
    }

    double band_limited(BandLimitedField& f) const
    {
        const Operator& op = ps_.op();
        GridField u = GridField::sample(geometry_, op.dim_v(), [&](const Eigen::VectorXd& x) { return f.value(x); });
        GridField ac = GridField::sample(geometry_, op.dim_w(),
                                         [&](const Eigen::VectorXd& x) { return op.apply_to_gradient(f.gradient(x)); });
        return evaluate(u, MeasureField(std::move(ac)));
    }

    // params: direction angles (n - 1), offset in units of r, then kernel
    // coefficients for the minus and the plus side.
    double piecewise(const Eigen::VectorXd& params) const
    {
        const int n = geometry_.n();
        const auto k = static_cast<Eigen::Index>(kernel_.size());
        Eigen::VectorXd nu(n);
        if (n == 2) {
            nu << std::cos(params(0)), std::sin(params(0));
        } else {
            nu << std::sin(params(0)) * std::cos(params(1)), std::sin(params(0)) * std::sin(params(1)),
                std::cos(params(0));
        }
        const double s = std::clamp(params(n - 1), -0.9, 0.9);
        const double offset = nu.dot(ball_.center()) + s * ball_.radius();
        PiecewiseKernelSpec spec;
        for (int side = 0; side < 2; ++side) {
            PolynomialField field(n, ps_.op().dim_v());
            for (Eigen::Index m = 0; m < k; ++m) {
                field += params(n + side * k + m) * kernel_[static_cast<std::size_t>(m)];
            }
            HalfSpace h = side == 0 ? HalfSpace{nu, offset} : HalfSpace{-nu, -offset};
            spec.pieces.push_back({Region{{h}}, std::move(field)});
        }
        const RealizedField rf = realize(FieldSpec{FieldKind{spec}, geometry_}, ps_.op());
        return evaluate(rf.u, rf.mu);
    }

private:
    static GridGeometry make_grid(const Ball& ball, int cpd)
    {
        const int n = ball.n();
        const double h = 2.0 * ball.radius() / cpd;
        const int cells = cpd + 4;
        const Eigen::VectorXd lo = ball.center().array() - 0.5 * cells * h;
        const Eigen::VectorXd hi = ball.center().array() + 0.5 * cells * h;
        return GridGeometry(std::vector<int>(static_cast<std::size_t>(n), cells), lo, hi);
    }

    const PoincareSobolev& ps_;
    Ball ball_;
    GridGeometry geometry_;
    std::vector<PolynomialField> kernel_;
};

// Coordinate-wise hill climbing; returns the improved value.
double hill_climb(Eigen::VectorXd& params, double value, int steps, double step,
                  const std::function<double(const Eigen::VectorXd&)>& objective)
{
    int rejections = 0;
    for (int it = 0; it < steps && params.size() > 0; ++it) {
        const Eigen::Index i = it % params.size();
        bool accepted = false;
        for (const double sign : {1.0, -1.0}) {
            Eigen::VectorXd trial = params;
            trial(i) += sign * step;
            const double v = objective(trial);
            if (v > value) {
                params = std::move(trial);
                value = v;
                accepted = true;
                break;
            }
        }
        if (accepted) {
            rejections = 0;
        } else if (++rejections >= 10) {
            step *= 0.5;
            rejections = 0;
        }
    }
    return value;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TrialResult run_trial(const TrialContext& ctx, const PoincareSobolev& ps, const SharpConstantConfig& cfg, int t)
{
    const int n = ps.op().n();
    const bool piecewise = cfg.include_piecewise && (t % 2 == 1) && (n == 2 || n == 3);
    Rng rng = make_rng(cfg.seed, "sharp_constant_trial", static_cast<std::uint64_t>(t));
    TrialResult best;
    if (!piecewise) {
        const int band = 1 + (t / (cfg.include_piecewise ? 2 : 1)) % std::max(1, cfg.max_band);
        const auto& g = ctx.geometry();
        BandLimitedField f(n, ps.op().dim_v(), band, 1.0, derive_seed(cfg.seed, "sharp_constant_field", t), g.lo(),
                           g.hi() - g.lo());
        Eigen::VectorXd params = f.parameters();
        const auto objective = [&](const Eigen::VectorXd& p) {
            f.set_parameters(p);
            return ctx.band_limited(f);
        };
        const double start = objective(params);
        best.ratio = hill_climb(params, start, cfg.refine_steps, 0.25 * std::max(params.cwiseAbs().maxCoeff(), 1e-3),
                                objective);
        best.descriptor = {{"kind", "band_limited"}, {"trial", t}, {"band", band}, {"parameters", to_std(params)}};
        return best;
    }
    const auto k = static_cast<Eigen::Index>(ctx.kernel().size());
    Eigen::VectorXd params(n + 2 * k);
    for (int a = 0; a < n - 1; ++a) {
        params(a) = std::numbers::pi * uniform01(rng);
    }
    params(n - 1) = 1.2 * uniform01(rng) - 0.6;
    for (Eigen::Index m = 0; m < 2 * k; ++m) {
        params(n + m) = standard_normal(rng);
    }
    const auto objective = [&](const Eigen::VectorXd& p) { return ctx.piecewise(p); };
    best.ratio = hill_climb(params, objective(params), cfg.refine_steps, 0.25, objective);
    best.descriptor = {{"kind", "piecewise_kernel"}, {"trial", t}, {"parameters", to_std(params)}};
    return best;
}

} // namespace

SharpConstantEstimate estimate_sharp_constant(const PoincareSobolev& ps, const Ball& ball,
                                              const SharpConstantConfig& cfg)
{
    if (cfg.trials < 1) {
        throw InputError("empty search: at least one trial is needed");
    }
    if (cfg.cells_per_diameter < 16) {
        throw ResolutionError("trial fields need at least 16 cells per ball diameter");
    }
    const TrialContext ctx(ps, ball, cfg.cells_per_diameter);
    SharpConstantEstimate est;
    double best = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < cfg.trials; ++t) {
        TrialResult r = run_trial(ctx, ps, cfg, t);
        if (r.ratio > best) {
            best = r.ratio;
            est.argmax = std::move(r.descriptor);
        }
        est.running_max.push_back(std::max(best, 0.0));
    }
    est.constant = std::max(best, 0.0);
    return est;
}

} // namespace bvlab
