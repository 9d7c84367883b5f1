#include "bvlab/ballcalc.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bvlab/errors.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

Ball::Ball(Eigen::VectorXd center, double radius) : center_(std::move(center)), radius_(radius)
{
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InputError("ball radius must be positive and finite");
    }
    if (center_.size() < 1 || !center_.allFinite()) {
        throw InputError("ball center must be a finite vector");
    }
}

double Ball::volume() const
{
    return ball_volume(n(), radius_);
}

bool Ball::contains(const Eigen::VectorXd& x) const
{
    return (x - center_).squaredNorm() <= radius_ * radius_ * (1.0 + 1e-12);
}

double ball_volume(int n, double radius)
{
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(radius, n);
}

double ball_monomial_moment(int n, const MultiIndex& alpha, const Ball& ball)
{
    if (static_cast<int>(alpha.size()) != n || ball.n() != n) {
        throw InputError("moment: multi-index and ball dimension must equal n");
    }
    // int_{S^{n-1}} z^alpha = 2 prod Gamma(b_i) / Gamma(sum b_i), b_i = (alpha_i + 1) / 2,
    // then the radial integral contributes r^{n + |alpha|} / (n + |alpha|).
    double log_sphere = std::log(2.0);
    double b_sum = 0.0;
    for (int a : alpha) {
        if (a < 0) {
            throw InputError("moment: negative exponent");
        }
        if (a % 2 == 1) {
            return 0.0;
        }
        const double b = 0.5 * (a + 1);
        log_sphere += std::lgamma(b);
        b_sum += b;
    }
    log_sphere -= std::lgamma(b_sum);
    const int deg = total_degree(alpha);
    return std::exp(log_sphere) * std::pow(ball.radius(), n + deg) / (n + deg);
}

double l2_inner(const PolynomialField& p, const PolynomialField& q, const Ball& ball)
{
    if (p.n() != q.n() || p.value_dim() != q.value_dim() || p.n() != ball.n()) {
        throw InputError("l2_inner: shapes differ");
    }
    const auto ps = p.shifted(ball.center());
    const auto qs = q.shifted(ball.center());
    double s = 0.0;
    MultiIndex gamma(static_cast<std::size_t>(p.n()));
    for (const auto& [a, ca] : ps.terms()) {
        for (const auto& [b, cb] : qs.terms()) {
            for (std::size_t i = 0; i < gamma.size(); ++i) {
                gamma[i] = a[i] + b[i];
            }
            const double m = ball_monomial_moment(p.n(), gamma, Ball(Eigen::VectorXd::Zero(p.n()), ball.radius()));
            if (m != 0.0) {
                s += ca.dot(cb) * m;
            }
        }
    }
    return s;
}

PolynomialField push_forward(const PolynomialField& p, const Ball& ball)
{
    return p.compose_affine(1.0 / ball.radius(), -ball.center() / ball.radius());
}

BallCells::BallCells(Ball ball, std::vector<Eigen::VectorXd> points, std::vector<std::size_t> grid_points,
                     double spacing)
    : ball_(std::move(ball)), points_(std::move(points)), grid_points_(std::move(grid_points)), spacing_(spacing)
{
    if (points_.empty()) {
        throw ResolutionError("ball contains no cell centres");
    }
    weight_ = ball_.volume() / static_cast<double>(points_.size());
}

BallCells BallCells::from_grid(const GridGeometry& g, const Ball& ball, double min_cells_per_diameter)
{
    const int n = g.n();
    if (ball.n() != n) {
        throw InputError("ball and grid dimensions differ");
    }
    const double r = ball.radius();
    if (2.0 * r / g.max_spacing() < min_cells_per_diameter * (1.0 - 1e-9)) {
        throw ResolutionError("ball of radius " + std::to_string(r) + " spans fewer than "
                              + std::to_string(min_cells_per_diameter) + " cells across its diameter");
    }
    std::vector<int> kmin(static_cast<std::size_t>(n)), kmax(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double c = ball.center()(i);
        if (!g.periodic()) {
            const double slack = 1e-9 * (g.hi()(i) - g.lo()(i));
            if (c - r < g.lo()(i) - slack || c + r > g.hi()(i) + slack) {
                throw InputError("ball leaves the grid box");
            }
        }
        kmin[static_cast<std::size_t>(i)] = static_cast<int>(std::floor((c - r - g.lo()(i)) / g.spacing(i) - 0.5));
        kmax[static_cast<std::size_t>(i)] = static_cast<int>(std::ceil((c + r - g.lo()(i)) / g.spacing(i) - 0.5));
    }
    std::vector<Eigen::VectorXd> points;
    std::vector<std::size_t> flat;
    std::vector<int> k = kmin;
    std::vector<int> wrapped(static_cast<std::size_t>(n));
    Eigen::VectorXd x(n);
    while (true) {
        bool inside_grid = true;
        for (int i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const int cells = g.shape()[ii];
            x(i) = g.lo()(i) + (k[ii] + 0.5) * g.spacing(i);
            if (g.periodic()) {
                wrapped[ii] = ((k[ii] % cells) + cells) % cells;
            } else {
                wrapped[ii] = k[ii];
                inside_grid = inside_grid && k[ii] >= 0 && k[ii] < cells;
            }
        }
        if (inside_grid && ball.contains(x)) {
            points.push_back(x);
            flat.push_back(g.flat_index(wrapped));
        }
        int axis = n - 1;
        while (axis >= 0 && ++k[static_cast<std::size_t>(axis)] > kmax[static_cast<std::size_t>(axis)]) {
            k[static_cast<std::size_t>(axis)] = kmin[static_cast<std::size_t>(axis)];
            --axis;
        }
        if (axis < 0) {
            break;
        }
    }
    return BallCells(ball, std::move(points), std::move(flat), g.max_spacing());
}

BallCells BallCells::local(const Ball& ball, int cells_per_diameter)
{
    if (cells_per_diameter < 2) {
        throw ResolutionError("local ball quadrature needs at least 2 cells per diameter");
    }
    const int n = ball.n();
    const double h = 2.0 * ball.radius() / cells_per_diameter;
    std::vector<Eigen::VectorXd> points;
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd z(n);
    while (true) {
        for (int i = 0; i < n; ++i) {
            z(i) = -1.0 + (k[static_cast<std::size_t>(i)] + 0.5) * (2.0 / cells_per_diameter);
        }
        if (z.squaredNorm() <= 1.0) {
            points.push_back(ball.from_unit(z));
        }
        int axis = n - 1;
        while (axis >= 0 && ++k[static_cast<std::size_t>(axis)] >= cells_per_diameter) {
            k[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) {
            break;
        }
    }
    return BallCells(ball, std::move(points), {}, h);
}

std::vector<Eigen::VectorXd> sup_sample_points(const BallCells& cells)
{
    std::vector<Eigen::VectorXd> pts = cells.points();
    const Ball& b = cells.ball();
    const int n = b.n();
    const double across = 2.0 * b.radius() / cells.spacing();
    Eigen::VectorXd z(n);
    if (n == 1) {
        pts.push_back(b.from_unit(Eigen::VectorXd::Constant(1, 1.0)));
        pts.push_back(b.from_unit(Eigen::VectorXd::Constant(1, -1.0)));
    } else if (n == 2) {
        const int m = std::max(64, static_cast<int>(8 * across));
        for (int k = 0; k < m; ++k) {
            const double t = 2.0 * std::numbers::pi * k / m;
            z << std::cos(t), std::sin(t);
            pts.push_back(b.from_unit(z));
        }
    } else if (n == 3) {
        const int m = std::max(256, static_cast<int>(4 * across * across));
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < m; ++k) {
            const double y = 1.0 - 2.0 * (k + 0.5) / m;
            const double rho = std::sqrt(1.0 - y * y);
            z << rho * std::cos(golden * k), y, rho * std::sin(golden * k);
            pts.push_back(b.from_unit(z));
        }
    } else {
        Rng rng = make_rng(0, "sup-sphere");
        for (int k = 0; k < 4096; ++k) {
            for (int i = 0; i < n; ++i) {
                z(i) = standard_normal(rng);
            }
            pts.push_back(b.from_unit(z.normalized()));
        }
    }
    return pts;
}

namespace {

ProjectionBasis orthonormalize_gram(const std::vector<PolynomialField>& basis, const Eigen::MatrixXd& gram, Ball ball)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const auto& lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    const double lmin = lambda.minCoeff();
    if (!(lmax > 0.0) || lmin <= 1e-13 * lmax) {
        throw DegenerateInputError("Gram matrix of the null-space basis is numerically singular");
    }
    const Eigen::MatrixXd inv_sqrt =
        eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    ProjectionBasis pb{std::move(ball), {}, lmax / lmin, ProjectionBasis::Quadrature::Exact, nullptr};
    for (std::size_t k = 0; k < basis.size(); ++k) {
        PolynomialField e(basis.front().n(), basis.front().value_dim());
        for (std::size_t i = 0; i < basis.size(); ++i) {
            e += inv_sqrt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * basis[i];
        }
        pb.elements.push_back(std::move(e));
    }
    return pb;
}

void check_basis(const std::vector<PolynomialField>& basis, const Ball& ball)
{
    if (basis.empty()) {
        throw DegenerateInputError("orthonormalize: empty basis");
    }
    for (const auto& p : basis) {
        if (p.n() != ball.n() || p.value_dim() != basis.front().value_dim()) {
            throw InputError("orthonormalize: basis elements have inconsistent shapes");
        }
    }
}

// values(q, c) of a polynomial at every cell
Eigen::MatrixXd evaluate_on(const PolynomialField& p, const BallCells& cells)
{
    Eigen::MatrixXd v(static_cast<Eigen::Index>(cells.size()), p.value_dim());
    for (std::size_t q = 0; q < cells.size(); ++q) {
        v.row(static_cast<Eigen::Index>(q)) = p(cells.points()[q]).transpose();
    }
    return v;
}

} // namespace

ProjectionBasis orthonormalize(const std::vector<PolynomialField>& basis, const Ball& ball)
{
    check_basis(basis, ball);
    const auto k = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) = gram(j, i) = l2_inner(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)], ball);
        }
    }
    return orthonormalize_gram(basis, gram, ball);
}

ProjectionBasis orthonormalize(const std::vector<PolynomialField>& basis, const BallCells& cells)
{
    check_basis(basis, cells.ball());
    std::vector<Eigen::MatrixXd> values;
    for (const auto& p : basis) {
        values.push_back(evaluate_on(p, cells));
    }
    const auto k = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) = gram(j, i) =
                cells.weight() * values[static_cast<std::size_t>(i)].cwiseProduct(values[static_cast<std::size_t>(j)]).sum();
        }
    }
    auto pb = orthonormalize_gram(basis, gram, cells.ball());
    pb.quadrature = ProjectionBasis::Quadrature::Cells;
    pb.cells = std::make_shared<const BallCells>(cells);
    return pb;
}

PolynomialField combine(const ProjectionBasis& pb, const Eigen::VectorXd& coefficients)
{
    PolynomialField out(pb.elements.front().n(), pb.elements.front().value_dim());
    for (std::size_t j = 0; j < pb.elements.size(); ++j) {
        out += coefficients(static_cast<Eigen::Index>(j)) * pb.elements[j];
    }
    return out;
}

Eigen::VectorXd projection_coefficients(const PolynomialField& v, const ProjectionBasis& pb)
{
    const auto k = static_cast<Eigen::Index>(pb.elements.size());
    Eigen::VectorXd c(k);
    if (pb.quadrature == ProjectionBasis::Quadrature::Exact) {
        for (Eigen::Index j = 0; j < k; ++j) {
            c(j) = l2_inner(v, pb.elements[static_cast<std::size_t>(j)], pb.ball);
        }
        return c;
    }
    const Eigen::MatrixXd vv = evaluate_on(v, *pb.cells);
    return CellProjector(pb, *pb.cells).coefficients(vv);
}

PolynomialField l2_project(const PolynomialField& v, const ProjectionBasis& pb)
{
    return combine(pb, projection_coefficients(v, pb));
}

Eigen::VectorXd projection_coefficients(const GridField& v, const ProjectionBasis& pb, const BallCells& cells)
{
    if (cells.grid_points().size() != cells.size()) {
        throw InputError("projection of a grid field needs grid-based cells");
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(cells.size()), v.dim());
    for (std::size_t q = 0; q < cells.size(); ++q) {
        values.row(static_cast<Eigen::Index>(q)) = v.value(cells.grid_points()[q]).transpose();
    }
    return CellProjector(pb, cells).coefficients(values);
}

PolynomialField l2_project(const GridField& v, const ProjectionBasis& pb, const BallCells& cells)
{
    return combine(pb, projection_coefficients(v, pb, cells));
}

PolynomialField l2_project(const GridField& v, const ProjectionBasis& pb)
{
    return l2_project(v, pb, BallCells::from_grid(v.geometry(), pb.ball, 8.0));
}

CellProjector::CellProjector(const ProjectionBasis& pb, const BallCells& cells)
    : dim_(pb.elements.front().value_dim()), cells_(cells.size()), weight_(cells.weight())
{
    for (const auto& e : pb.elements) {
        basis_values_.push_back(evaluate_on(e, cells));
    }
}

Eigen::VectorXd CellProjector::coefficients(const Eigen::MatrixXd& values) const
{
    if (values.rows() != static_cast<Eigen::Index>(cells_) || values.cols() != dim_) {
        throw InputError("CellProjector: values have the wrong shape");
    }
    Eigen::VectorXd c(static_cast<Eigen::Index>(basis_values_.size()));
    for (std::size_t j = 0; j < basis_values_.size(); ++j) {
        c(static_cast<Eigen::Index>(j)) = weight_ * basis_values_[j].cwiseProduct(values).sum();
    }
    return c;
}

Eigen::MatrixXd CellProjector::project(const Eigen::MatrixXd& values) const
{
    const Eigen::VectorXd c = coefficients(values);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(values.rows(), values.cols());
    for (std::size_t j = 0; j < basis_values_.size(); ++j) {
        out += c(static_cast<Eigen::Index>(j)) * basis_values_[j];
    }
    return out;
}

StabilityReport projection_stability_constant(const Operator& op, const Ball& ball,
                                              const std::vector<VectorFunction>& unit_trials, int cells_per_diameter,
                                              int degree_cap)
{
    const auto kernel = kernel_basis(op, degree_cap);
    std::vector<PolynomialField> pushed;
    for (const auto& p : kernel) {
        pushed.push_back(push_forward(p, ball));
    }
    const BallCells cells = BallCells::local(ball, cells_per_diameter);
    const ProjectionBasis pb = orthonormalize(pushed, cells);
    const CellProjector projector(pb, cells);

    StabilityReport rep;
    rep.gram_conditioning = pb.gram_conditioning;
    for (const auto& trial : unit_trials) {
        Eigen::MatrixXd values(static_cast<Eigen::Index>(cells.size()), op.dim_v());
        for (std::size_t q = 0; q < cells.size(); ++q) {
            values.row(static_cast<Eigen::Index>(q)) = trial(ball.to_unit(cells.points()[q])).transpose();
        }
        const Eigen::MatrixXd projected = projector.project(values);
        const double mean_v = values.rowwise().norm().mean();
        const double mean_pv = projected.rowwise().norm().mean();
        const double ratio = mean_v > 0.0 ? mean_pv / mean_v : std::numeric_limits<double>::quiet_NaN();
        rep.ratios.push_back(ratio);
        if (!std::isnan(ratio)) {
            rep.constant = std::max(rep.constant, ratio);
        }
    }
    for (const auto& y : sup_sample_points(cells)) {
        for (const auto& e : pb.elements) {
            rep.sup_bound = std::max(rep.sup_bound, e(y).norm());
        }
    }
    rep.scaled_sup_bound = rep.sup_bound * std::pow(ball.radius(), 0.5 * ball.n());
    return rep;
}

double norm_equivalence_ratio(const PolynomialField& p, const Ball& ball, int cells_per_diameter)
{
    const BallCells cells = BallCells::local(ball, cells_per_diameter);
    double sup = 0.0;
    for (const auto& y : sup_sample_points(cells)) {
        sup = std::max(sup, p(y).norm());
    }
    if (sup == 0.0) {
        throw DegenerateInputError("norm equivalence: zero polynomial");
    }
    // Normalizing by the sup first keeps constants exact.
    const double mean = cells.mean([&](std::size_t q) { return p(cells.points()[q]).norm() / sup; });
    return 1.0 / mean;
}

NormEquivalenceReport polynomial_norm_equivalence_constant(int l, int n, const std::vector<Ball>& balls, int trials,
                                                           std::uint64_t seed, int cells_per_diameter)
{
    if (l < 0) {
        throw InputError("degree must be nonnegative");
    }
    if (balls.empty() || trials < 1) {
        throw InputError("norm equivalence needs at least one ball and one trial");
    }
    const auto monomials = monomials_up_to(n, l);
    NormEquivalenceReport rep;
    rep.per_ball.assign(balls.size(), 0.0);
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, "norm-equivalence", static_cast<std::uint64_t>(t));
        PolynomialField p(n, 1);
        for (const auto& alpha : monomials) {
            p.add_term(0, alpha, standard_normal(rng));
        }
        for (std::size_t b = 0; b < balls.size(); ++b) {
            const double ratio = norm_equivalence_ratio(push_forward(p, balls[b]), balls[b], cells_per_diameter);
            rep.per_ball[b] = std::max(rep.per_ball[b], ratio);
        }
    }
    for (double c : rep.per_ball) {
        rep.constant = std::max(rep.constant, c);
    }
    return rep;
}

} // namespace bvlab
