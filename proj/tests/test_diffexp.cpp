#include "doctest.h"

#include <cmath>

#include "bvlab/diffexp.hpp"
#include "bvlab/errors.hpp"

using namespace bvlab;

namespace {

GridField scalar(const GridGeometry& g, double (*f)(const Eigen::VectorXd&))
{
    return GridField::sample(g, 1, [f](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, f(x)); });
}

} // namespace

TEST_CASE("affine fit is exact on affine fields and on even quadratic parts")
{
    const GridGeometry g = GridGeometry::cube(2, 64, -1.0, 1.0);
    const std::size_t p = g.flat_index({30, 40});
    const Eigen::VectorXd x = g.position(p);
    const GridField affine = scalar(g, [](const Eigen::VectorXd& y) { return 1.0 + 2.0 * y(0) - 0.5 * y(1); });
    const ApproxGradient a = approx_gradient(affine, x, 4 * g.min_spacing());
    CHECK(a.m(0, 0) == doctest::Approx(2.0));
    CHECK(a.m(0, 1) == doctest::Approx(-0.5));
    CHECK(a.residual < 1e-12);
    CHECK_FALSE(a.flagged);

    // the cell set is symmetric about a grid point: quadratic terms do not bias M
    const GridField quad = scalar(g, [](const Eigen::VectorXd& y) { return y(0) * y(0) + 3 * y(0) * y(1); });
    const ApproxGradient q = approx_gradient(quad, x, 4 * g.min_spacing());
    CHECK(q.m(0, 0) == doctest::Approx(2 * x(0) + 3 * x(1)).epsilon(1e-10));
    CHECK(q.m(0, 1) == doctest::Approx(3 * x(0)).epsilon(1e-10));

    const GridField jump = scalar(g, [](const Eigen::VectorXd& y) { return y(0) > 0.0 ? 1.0 : 0.0; });
    const std::size_t on = g.flat_index({32, 32});
    CHECK(approx_gradient(jump, g.position(on), 4 * g.min_spacing()).flagged);
    CHECK_THROWS_AS(approx_gradient(affine, x, 1.5 * g.min_spacing()), ResolutionError);
}

TEST_CASE("excess of |y - x|^2 matches the closed-form mean")
{
    // mean over B_r(x) of |y - x|^2 is r^2 n / (n + 2)
    const GridGeometry g = GridGeometry::cube(2, 256, -1.0, 1.0);
    const std::size_t p = g.flat_index({128, 128});
    const Eigen::VectorXd x = g.position(p);
    const GridField u = GridField::sample(g, 1, [&](const Eigen::VectorXd& y) {
        return Eigen::VectorXd::Constant(1, (y - x).squaredNorm());
    });
    const std::vector<double> radii = {0.25, 0.125, 0.0625, 0.03125};
    const ExcessReport e1 = excess(u, x, Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1), 1.0, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        CHECK(e1.excess[k] == doctest::Approx(radii[k] * radii[k] * 0.5).epsilon(0.01));
    }
    CHECK(e1.beta == doctest::Approx(2.0).epsilon(0.025));
    CHECK(e1.differentiable);
    // mean of |y - x|^4 is r^4 n / (n + 4): E_2 = r^2 sqrt(1/3)
    const ExcessReport e2 = excess(u, x, Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1), 2.0, radii);
    CHECK(e2.excess[0] == doctest::Approx(0.0625 / std::sqrt(3.0)).epsilon(0.01));
    CHECK_THROWS_AS(excess(u, x, Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1), 0.5, radii), InputError);
    CHECK_THROWS_AS(excess(u, x, Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1), 1.0, {0.2, 0.1, 0.3, 0.05}),
                    InputError);
}

TEST_CASE("jump excess does not decay and the slope clamps at the floor")
{
    const GridGeometry g = GridGeometry::cube(2, 256, -1.0, 1.0);
    const GridField jump = scalar(g, [](const Eigen::VectorXd& y) { return y(0) > 0.0 ? 1.0 : 0.0; });
    const std::size_t p = g.flat_index({128, 100});
    const Eigen::VectorXd x = g.position(p);
    const auto radii = dyadic_radii(g);
    const ExcessReport e = excess(jump, x, Eigen::MatrixXd::Zero(1, 2), jump.value(p), 1.0, radii);
    CHECK(std::abs(e.beta) < 0.1);
    CHECK_FALSE(e.differentiable);

    CHECK(loglog_slope({1, 2, 4, 8}, {0, 0, 0, 0}, 1e-12) == std::numeric_limits<double>::infinity());
    CHECK(loglog_slope({1, 2, 4, 8}, {1, 4, 16, 64}, 1e-12) == doctest::Approx(2.0));
}

TEST_CASE("dyadic radii respect the resolution floor")
{
    const auto r256 = dyadic_radii(GridGeometry::cube(2, 256, -1.0, 1.0));
    REQUIRE(r256.size() == 4);
    CHECK(r256.front() == doctest::Approx(0.25));
    for (std::size_t k = 1; k < r256.size(); ++k) {
        CHECK(r256[k] == doctest::Approx(r256[k - 1] / 2));
        CHECK(2 * r256[k] / (2.0 / 256) >= 8.0);
    }
    CHECK_THROWS_AS(dyadic_radii(GridGeometry::cube(2, 64, -1.0, 1.0)), ResolutionError);
}

TEST_CASE("interior samples avoid the interfaces, interface samples sit on them")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(0.6, 0.8), 0.1}};
    const RealizedField f = realize(FieldSpec{FieldKind{random_piecewise_kernel(op, cuts, 3)}, g}, op);
    const auto interior = sample_points(g, f.mu, 30, 1, SampleVariant::Interior, 0.2);
    CHECK(interior.size() == 30);
    for (std::size_t p : interior) {
        CHECK(f.mu.distance_to_singular(g.position(p)) > 4 * g.max_spacing());
    }
    const auto iface = sample_points(g, f.mu, 20, 1, SampleVariant::Interface, 0.2);
    CHECK_FALSE(iface.empty());
    for (std::size_t p : iface) {
        CHECK(f.mu.distance_to_singular(g.position(p)) <= g.max_spacing());
    }
    CHECK(sample_points(g, f.mu, 30, 1, SampleVariant::Interior, 0.2) == interior);
}

TEST_CASE("interface samples keep away from junctions")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(0.6, 0.8), 0.05}, {Eigen::Vector2d(-0.8, 0.6), -0.1}};
    const RealizedField f = realize(FieldSpec{FieldKind{random_piecewise_kernel(op, cuts, 6)}, g}, op);
    const auto& pieces = f.mu.singular_pieces();
    REQUIRE(pieces.size() == 4);
    for (std::size_t p : sample_points(g, f.mu, 40, 2, SampleVariant::Interface, 0.2)) {
        int near = 0;
        for (const auto& piece : pieces) {
            near += distance_to_piece(piece, g.position(p)) <= 4 * g.max_spacing() ? 1 : 0;
        }
        CHECK(near == 1);
    }
}

TEST_CASE("excess decomposition on a piecewise rigid field")
{
    const Operator op = symmetric_gradient(2);
    const PoincareSobolev ps(op);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(1.0, 0.0), 0.0}};
    const RealizedField f = realize(FieldSpec{FieldKind{random_piecewise_kernel(op, cuts, 8)}, g}, op);
    const std::size_t p = g.flat_index({64, 70});
    const Eigen::VectorXd x = g.position(p);
    const ApproxGradient a = approx_gradient(f.u, x, 4 * g.min_spacing());
    const DecompositionRow row = excess_decomposition(ps, f.u, f.mu, x, a.m, f.u.value(p), 0.25, 1.0);
    CHECK(row.triangle_holds);
    CHECK(row.i_r > 0.0);
    CHECK(row.total <= row.poincare + row.ii_r + 1e-12);
    CHECK(row.touches_boundary);
}

TEST_CASE("mollified gradients converge to the approximate gradient at a smooth point")
{
    const GridGeometry g = GridGeometry::cube(2, 256, -1.0, 1.0);
    const GridField u = scalar(g, [](const Eigen::VectorXd& y) { return std::sin(2 * y(0)) + y(1) * y(1) * y(0); });
    const std::size_t p = g.flat_index({140, 110});
    const Eigen::VectorXd x = g.position(p);
    Eigen::MatrixXd m(1, 2);
    m << 2 * std::cos(2 * x(0)) + x(1) * x(1), 2 * x(1) * x(0);
    const auto conv = mollified_gradient_convergence(u, p, m, {0.05, 0.1, 0.2});
    CHECK(conv.decreasing);
    CHECK(conv.eps.front() == doctest::Approx(0.2));
    CHECK(conv.errors.back() < 1e-2);
}

TEST_CASE("structure identity on a band-limited field")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const RealizedField f = realize(FieldSpec{FieldKind{BandLimitedSpec{5, 1, 1.0}}, g}, op);
    const auto pts = sample_points(g, f.mu, 20, 2, SampleVariant::Interior, 0.1);
    CHECK(structure_identity_check(op, f.u, f.mu, pts).max_relative_deviation < 0.01);
}
