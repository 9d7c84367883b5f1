#include "bvlab/diffexp.hpp"

#include <algorithm>
#include <cmath>

#include "bvlab/errors.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

namespace {

double box_side(const GridGeometry& g) { return (g.hi() - g.lo()).minCoeff(); }

Eigen::MatrixXd cell_values(const GridField& u, const BallCells& cells)
{
    Eigen::MatrixXd values(static_cast<Eigen::Index>(cells.size()), u.dim());
    for (std::size_t q = 0; q < cells.size(); ++q) {
        values.row(static_cast<Eigen::Index>(q)) = u.value(cells.grid_points()[q]).transpose();
    }
    return values;
}

// Rows v(y_q) = u(y_q) - u_at_x - M (y_q - x).
Eigen::MatrixXd remainder(const GridField& u, const BallCells& cells, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& m, const Eigen::VectorXd& u_at_x)
{
    Eigen::MatrixXd v = cell_values(u, cells);
    for (std::size_t q = 0; q < cells.size(); ++q) {
        const auto row = static_cast<Eigen::Index>(q);
        v.row(row) -= (u_at_x + m * (cells.points()[q] - x)).transpose();
    }
    return v;
}

double power_mean(const Eigen::MatrixXd& rows, double p)
{
    return std::pow(rows.rowwise().norm().array().pow(p).mean(), 1.0 / p);
}

} // namespace

ApproxGradient approx_gradient(const GridField& u, const Eigen::VectorXd& x, double r_fit)
{
    const auto& g = u.geometry();
    const int n = g.n();
    const BallCells cells = BallCells::from_grid(g, Ball(x, r_fit), 8.0);
    const auto rows = static_cast<Eigen::Index>(cells.size());
    Eigen::MatrixXd design(rows, n + 1);
    for (Eigen::Index q = 0; q < rows; ++q) {
        design(q, 0) = 1.0;
        design.row(q).tail(n) = (cells.points()[static_cast<std::size_t>(q)] - x).transpose();
    }
    const Eigen::MatrixXd values = cell_values(u, cells);
    const Eigen::MatrixXd coeffs = design.colPivHouseholderQr().solve(values);
    const Eigen::MatrixXd misfit = design * coeffs - values;

    ApproxGradient out;
    out.x = x;
    out.value = coeffs.row(0).transpose();
    out.m = coeffs.bottomRows(n).transpose();
    out.fit_radius = r_fit;
    out.residual = std::sqrt(misfit.rowwise().squaredNorm().mean());
    const Eigen::MatrixXd centred = values.rowwise() - values.colwise().mean();
    const double spread = std::sqrt(centred.rowwise().squaredNorm().mean());
    out.relative_residual = spread > 0.0 ? out.residual / spread : 0.0;
    const double scale = design.norm() * values.norm();
    out.optimality = scale > 0.0 ? (design.transpose() * misfit).cwiseAbs().maxCoeff() / scale : 0.0;
    out.flagged = out.relative_residual > 0.05;
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("a slope needs at least two (x, y) pairs");
    }
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v <= floor; })) {
        return std::numeric_limits<double>::infinity();
    }
    const auto m = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]);
        const double ly = std::log(std::max(y[k], floor));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

nlohmann::json ExcessReport::to_json() const
{
    nlohmann::json j{{"x", std::vector<double>(x.data(), x.data() + x.size())},
                     {"p", p},
                     {"radii", radii},
                     {"excess", excess},
                     {"differentiable", differentiable}};
    j["beta"] = std::isfinite(beta) ? nlohmann::json(beta) : nlohmann::json("inf");
    return j;
}

ExcessReport excess(const GridField& u, const Eigen::VectorXd& x, const Eigen::MatrixXd& m,
                    const Eigen::VectorXd& u_at_x, double p, const std::vector<double>& radii)
{
    if (!(p >= 1.0)) {
        throw InputError("the excess exponent must be at least 1");
    }
    if (radii.size() < 4) {
        throw InputError("the decay rate needs at least 4 radii");
    }
    for (std::size_t k = 1; k < radii.size(); ++k) {
        if (!(radii[k] < radii[k - 1])) {
            throw InputError("radii must be strictly decreasing");
        }
    }
    ExcessReport rep;
    rep.x = x;
    rep.p = p;
    rep.radii = radii;
    for (const double r : radii) {
        const BallCells cells = BallCells::from_grid(u.geometry(), Ball(x, r), 8.0);
        rep.excess.push_back(power_mean(remainder(u, cells, x, m, u_at_x), p));
    }
    // Excess below this is rounding noise of the samples themselves.
    const double scale = u_at_x.norm() + m.norm() * radii.front() + u.max_abs();
    rep.beta = loglog_slope(radii, rep.excess, 1e-12 * std::max(scale, std::numeric_limits<double>::min()));
    rep.differentiable = rep.beta > 1.0;
    return rep;
}

std::vector<double> dyadic_radii(const GridGeometry& g, double r0, int count)
{
    if (r0 <= 0.0) {
        r0 = box_side(g) / 8.0;
    }
    std::vector<double> radii;
    for (int k = 0; k < count; ++k) {
        const double r = r0 * std::ldexp(1.0, -k);
        if (2.0 * r / g.max_spacing() >= 8.0 * (1.0 - 1e-9)) {
            radii.push_back(r);
        }
    }
    if (radii.size() < 4) {
        throw ResolutionError("only " + std::to_string(radii.size()) +
                              " dyadic radii resolve 8 cells per diameter; refine the grid");
    }
    return radii;
}

std::string to_string(SampleVariant v)
{
    switch (v) {
    case SampleVariant::Interior:
        return "interior";
    case SampleVariant::Blind:
        return "blind";
    case SampleVariant::Interface:
        return "interface";
    }
    return "unknown";
}

std::vector<std::size_t> sample_points(const GridGeometry& g, const MeasureField& mu, int count, std::uint64_t seed,
                                       SampleVariant variant, double margin, double exclusion_cells)
{
    if (count < 0) {
        throw InputError("negative sample count");
    }
    const double h = g.max_spacing();
    const auto fits = [&](const Eigen::VectorXd& x) {
        if (g.periodic()) {
            return true;
        }
        return ((x - g.lo()).array() >= margin).all() && ((g.hi() - x).array() >= margin).all();
    };
    Rng rng = make_rng(seed, "sample_points_" + to_string(variant));
    std::vector<std::size_t> out;
    const auto& pieces = mu.singular_pieces();
    if (variant == SampleVariant::Interface && pieces.empty()) {
        throw InputError("interface sampling needs singular pieces");
    }
    double total_measure = 0.0;
    for (const auto& piece : pieces) {
        total_measure += piece.measure();
    }
    const long long budget = 10000LL * std::max(count, 1);
    for (long long attempt = 0; attempt < budget && static_cast<int>(out.size()) < count; ++attempt) {
        std::size_t p = 0;
        if (variant == SampleVariant::Interface) {
            // random point on the interface, area weighted
            double pick = uniform01(rng) * total_measure;
            std::size_t which = 0;
            while (which + 1 < pieces.size() && pick > pieces[which].measure()) {
                pick -= pieces[which].measure();
                ++which;
            }
            const auto& v = pieces[which].vertices;
            Eigen::VectorXd y;
            if (v.size() == 2) {
                y = v[0] + uniform01(rng) * (v[1] - v[0]);
            } else {
                const std::size_t k = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(v.size() - 2));
                double a = uniform01(rng);
                double b = uniform01(rng);
                if (a + b > 1.0) {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                y = v[0] + a * (v[std::min(k, v.size() - 2)] - v[0]) + b * (v[std::min(k + 1, v.size() - 1)] - v[0]);
            }
            // Skip the part of the interface where the jump nearly vanishes
            // (two rigid motions agree at one point of the interface).
            double strongest = 0.0;
            for (const auto& [node, w] : piece_nodes(pieces[which], 0.25 * pieces[which].measure())) {
                strongest = std::max(strongest, pieces[which].density(node).norm());
            }
            for (const auto& corner : v) {
                strongest = std::max(strongest, pieces[which].density(corner).norm());
            }
            if (pieces[which].density(y).norm() < 0.5 * strongest) {
                continue;
            }
            p = g.flat_index(g.nearest_index(y));
            // Probes sit on exactly one interface: junctions where pieces meet
            // are excluded with the same margin as interior points.
            const Eigen::VectorXd xp = g.position(p);
            bool near_other = false;
            for (std::size_t j = 0; j < pieces.size() && !near_other; ++j) {
                near_other = j != which && distance_to_piece(pieces[j], xp) <= exclusion_cells * h;
            }
            if (near_other) {
                continue;
            }
        } else {
            p = static_cast<std::size_t>(rng() % g.size());
        }
        const Eigen::VectorXd x = g.position(p);
        if (!fits(x)) {
            continue;
        }
        if (variant == SampleVariant::Interior && mu.distance_to_singular(x) <= exclusion_cells * h) {
            continue;
        }
        out.push_back(p);
    }
    if (static_cast<int>(out.size()) < count) {
        throw InputError("could not place " + std::to_string(count) + " sample points");
    }
    return out;
}

DecompositionRow excess_decomposition(const PoincareSobolev& ps, const GridField& u, const MeasureField& mu,
                                      const Eigen::VectorXd& x, const Eigen::MatrixXd& m,
                                      const Eigen::VectorXd& u_at_x, double r, double constant)
{
    const Operator& op = ps.op();
    const Ball ball(x, r);
    const BallCells cells = BallCells::from_grid(u.geometry(), ball, 8.0);
    const Eigen::MatrixXd v = remainder(u, cells, x, m, u_at_x);
    const CellProjector projector(ps.basis(cells), cells);
    const Eigen::MatrixXd pv = projector.project(v);
    const double q = ps.exponent();
    const Eigen::VectorXd offset = op.apply_to_gradient(m);
    const Variation tv = mu.total_variation(BallCells::from_grid(mu.ac_density().geometry(), ball, 8.0), &offset);

    DecompositionRow row;
    row.r = r;
    row.total = power_mean(v, q);
    row.poincare = power_mean(v - pv, q);
    row.i_r = r * tv.total() / ball.volume();
    row.ii_r = power_mean(pv, q);
    row.mean_v = v.rowwise().norm().mean();
    row.mean_pi_v = pv.rowwise().norm().mean();
    row.constant = constant;
    row.touches_boundary = tv.touches_boundary;
    // Remainders at rounding level of the field itself count as zero.
    const double field_scale = u_at_x.norm() + m.norm() * r + cell_values(u, cells).rowwise().norm().maxCoeff();
    const double slack = 1e-10 * (row.total + row.poincare + row.ii_r) + 1e-12 * field_scale;
    row.triangle_holds = row.total <= row.poincare + row.ii_r + slack;
    row.bound_holds = row.total <= constant * row.i_r + row.ii_r + slack;
    return row;
}

double RateTable::pass_fraction(double p) const
{
    const auto it = std::find_if(exponents.begin(), exponents.end(), [&](double e) { return std::abs(e - p) < 1e-12; });
    if (it == exponents.end()) {
        throw InputError("exponent was not tested");
    }
    const auto k = static_cast<std::size_t>(it - exponents.begin());
    if (points.empty()) {
        return 0.0;
    }
    const auto pass = std::count_if(points.begin(), points.end(),
                                    [&](const PointReport& pr) { return pr.excess[k].differentiable; });
    return static_cast<double>(pass) / static_cast<double>(points.size());
}

double RateTable::median_beta(double p) const
{
    const auto it = std::find_if(exponents.begin(), exponents.end(), [&](double e) { return std::abs(e - p) < 1e-12; });
    if (it == exponents.end() || points.empty()) {
        throw InputError("exponent was not tested");
    }
    const auto k = static_cast<std::size_t>(it - exponents.begin());
    std::vector<double> betas;
    for (const auto& pr : points) {
        betas.push_back(pr.excess[k].beta);
    }
    std::sort(betas.begin(), betas.end());
    const std::size_t mid = betas.size() / 2;
    return betas.size() % 2 == 1 ? betas[mid] : 0.5 * (betas[mid - 1] + betas[mid]);
}

bool RateTable::verdicts_monotone() const
{
    std::vector<std::size_t> order(exponents.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return exponents[a] < exponents[b]; });
    for (const auto& pr : points) {
        bool failed_below = false;
        for (const auto k : order) {
            if (pr.excess[k].differentiable && failed_below) {
                return false;
            }
            failed_below = failed_below || !pr.excess[k].differentiable;
        }
    }
    return true;
}

RateTable critical_rate_experiment(const PoincareSobolev& ps, const RealizedField& field,
                                   const std::vector<std::size_t>& points, const RateConfig& cfg,
                                   const std::string& label)
{
    const GridField& u = field.u;
    const auto& g = u.geometry();
    RateTable table;
    table.critical_exponent = ps.exponent();
    table.exponents = cfg.exponents.empty() ? std::vector<double>{ps.exponent()} : cfg.exponents;
    table.radii = cfg.radii.empty() ? dyadic_radii(g) : cfg.radii;
    const double r_fit = cfg.fit_cells * g.max_spacing();
    for (const auto p : points) {
        PointReport pr;
        pr.grid_point = p;
        pr.x = g.position(p);
        pr.label = label;
        pr.gradient = approx_gradient(u, pr.x, r_fit);
        const Eigen::VectorXd u_at_x = u.value(p);
        for (const double e : table.exponents) {
            pr.excess.push_back(excess(u, pr.x, pr.gradient.m, u_at_x, e, table.radii));
        }
        if (cfg.decomposition) {
            for (const double r : table.radii) {
                pr.decomposition.push_back(
                    excess_decomposition(ps, u, field.mu, pr.x, pr.gradient.m, u_at_x, r, cfg.constant));
            }
        }
        table.points.push_back(std::move(pr));
    }
    return table;
}

StructureReport structure_identity_check(const Operator& op, const GridField& u, const MeasureField& mu,
                                         const std::vector<std::size_t>& points, double fit_cells)
{
    const GridField& ac = mu.ac_density();
    const double rms = ac.rms();
    const double h = u.geometry().max_spacing();
    // Both sides below this are zero up to rounding of the samples.
    const double zero = 1e-9 * (u.max_abs() / h + rms);
    StructureReport rep;
    for (const auto p : points) {
        StructurePoint sp;
        sp.x = u.geometry().position(p);
        const ApproxGradient grad = approx_gradient(u, sp.x, fit_cells * h);
        sp.fitted = op.apply_to_gradient(grad.m);
        sp.density = ac.value(p);
        const double diff = (sp.fitted - sp.density).norm();
        const double denom = std::max(sp.density.norm(), rms);
        sp.deviation = diff <= zero ? 0.0 : diff / denom;
        rep.max_relative_deviation = std::max(rep.max_relative_deviation, sp.deviation);
        rep.points.push_back(std::move(sp));
    }
    return rep;
}

MollifierConvergence mollified_gradient_convergence(const GridField& u, std::size_t point, const Eigen::MatrixXd& m,
                                                    const std::vector<double>& eps_list)
{
    if (eps_list.size() < 2) {
        throw InputError("convergence needs at least two mollifier radii");
    }
    const auto& g = u.geometry();
    MollifierConvergence out;
    out.eps = eps_list;
    std::sort(out.eps.begin(), out.eps.end(), std::greater<>());
    for (const double eps : out.eps) {
        Eigen::MatrixXd grad(u.dim(), g.n());
        for (int axis = 0; axis < g.n(); ++axis) {
            const std::size_t plus = g.neighbor(point, axis, 1);
            const std::size_t minus = g.neighbor(point, axis, -1);
            if (plus == g.size() || minus == g.size()) {
                throw InputError("point lies on the grid boundary");
            }
            grad.col(axis) = (mollify_at(u, plus, eps) - mollify_at(u, minus, eps)) / (2.0 * g.spacing(axis));
        }
        out.errors.push_back((grad - m).norm());
    }
    out.decreasing = true;
    for (std::size_t k = 1; k < out.errors.size(); ++k) {
        if (out.errors[k] > out.errors[k - 1] + 1e-12 * (1.0 + m.norm())) {
            out.decreasing = false;
        }
    }
    out.slope = loglog_slope(out.eps, out.errors, 1e-13 * (1.0 + m.norm()));
    return out;
}

} // namespace bvlab
