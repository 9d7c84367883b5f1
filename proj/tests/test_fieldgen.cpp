#include "doctest.h"

#include <numbers>

#include "bvlab/errors.hpp"
#include "bvlab/fieldgen.hpp"
#include "bvlab/measure.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/random.hpp"
#include "oracles.hpp"

using namespace bvlab;

namespace {

PolynomialField constant2(double a, double b)
{
    return PolynomialField::constant(2, Eigen::Vector2d(a, b));
}

// u = 0 for x1 < 0 and u = (0, 1) for x1 > 0
PiecewiseKernelSpec vertical_jump()
{
    PiecewiseKernelSpec spec;
    spec.pieces.push_back({Region{{HalfSpace{Eigen::Vector2d(1.0, 0.0), 0.0}}}, constant2(0.0, 0.0)});
    spec.pieces.push_back({Region{{HalfSpace{Eigen::Vector2d(-1.0, 0.0), 0.0}}}, constant2(0.0, 1.0)});
    return spec;
}

} // namespace

TEST_CASE("jump density of the symmetric gradient is sym(jump x normal)")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 64, -1.0, 1.0);
    const RealizedField f = realize(FieldSpec{FieldKind{vertical_jump()}, g}, op);
    REQUIRE(f.mu.singular_pieces().size() == 1);
    const SingularPiece& piece = f.mu.singular_pieces().front();
    const Eigen::Vector2d jump(0.0, 1.0);
    const Eigen::Vector2d nu = piece.normal;
    CHECK(std::abs(nu(0)) == doctest::Approx(1.0));
    // orientation: jump measured from the minus to the plus side of nu
    const Eigen::Vector2d signed_jump = nu(0) > 0 ? jump : Eigen::Vector2d(-jump);
    const Eigen::Matrix2d expected = 0.5 * (signed_jump * nu.transpose() + nu * signed_jump.transpose());
    const Eigen::VectorXd density = piece.density(Eigen::Vector2d(0.0, 0.3));
    CHECK(density(0) == doctest::Approx(expected(0, 0)).scale(1.0));
    CHECK(density(1) == doctest::Approx(expected(0, 1)));
    CHECK(density(2) == doctest::Approx(expected(1, 0)));
    CHECK(density(3) == doctest::Approx(expected(1, 1)).scale(1.0));
    CHECK(std::abs(density(1)) == doctest::Approx(0.5));
    CHECK(piece.measure() == doctest::Approx(2.0));
    CHECK(f.mu.ac_density().max_abs() == 0.0);
}

TEST_CASE("piece variation equals density times chord length")
{
    const SingularPiece piece{{Eigen::Vector2d(0.3, -2.0), Eigen::Vector2d(0.3, 2.0)}, Eigen::Vector2d(1.0, 0.0),
                              PolynomialField::constant(2, Eigen::Vector2d(3.0, 4.0))};
    const Ball ball(Eigen::Vector2d(0.0, 0.1), 0.5);
    const PieceVariation v = piece_variation(piece, ball);
    CHECK(v.value == doctest::Approx(5.0 * 2.0 * std::sqrt(0.25 - 0.09)).epsilon(1e-10));
    CHECK(v.touches_boundary);
    const SingularPiece inner{{Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(0.3, 0.2)}, Eigen::Vector2d(1.0, 0.0),
                              PolynomialField::constant(2, Eigen::Vector2d(3.0, 4.0))};
    const PieceVariation vi = piece_variation(inner, ball);
    CHECK(vi.value == doctest::Approx(5.0 * 0.2).epsilon(1e-10));
    CHECK_FALSE(vi.touches_boundary);
    CHECK(piece_variation(piece, Ball(Eigen::Vector2d(2.0, 0.0), 0.5)).value == 0.0);
}

TEST_CASE("realized measure pairs with test functions like the distributional derivative")
{
    // <A u, phi> = - int u . sum_j A_j^T d_j phi, checked for smooth bumps phi
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 64, -1.0, 1.0);
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(0.6, 0.8), 0.1}, {Eigen::Vector2d(-0.8, 0.6), -0.15}};
    const PiecewiseKernelSpec spec = random_piecewise_kernel(op, cuts, 11);
    const RealizedField f = realize(FieldSpec{FieldKind{spec}, g}, op);
    const auto u = *pointwise(FieldKind{spec}, op, g);

    Rng rng = make_rng(5, "pairing_test");
    const int quad = 1200;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector2d c(0.8 * (uniform01(rng) - 0.5), 0.8 * (uniform01(rng) - 0.5));
        const double rad = 0.25 + 0.2 * uniform01(rng);
        Eigen::VectorXd coef(4);
        for (int w = 0; w < 4; ++w) {
            coef(w) = standard_normal(rng);
        }
        // phi(x) = coef * psi(|x - c| / rad), psi(s) = (1 - s^2)^4
        const auto psi = [&](const Eigen::Vector2d& x) {
            const double s2 = (x - c).squaredNorm() / (rad * rad);
            return s2 < 1.0 ? std::pow(1.0 - s2, 4) : 0.0;
        };
        const auto grad_psi = [&](const Eigen::Vector2d& x) -> Eigen::Vector2d {
            const double s2 = (x - c).squaredNorm() / (rad * rad);
            if (s2 >= 1.0) {
                return Eigen::Vector2d::Zero();
            }
            return -8.0 * std::pow(1.0 - s2, 3) * (x - c) / (rad * rad);
        };
        const double h = 2.0 * rad / quad;
        double weak = 0.0;
        for (int i = 0; i < quad; ++i) {
            for (int j = 0; j < quad; ++j) {
                const Eigen::Vector2d x(c(0) - rad + (i + 0.5) * h, c(1) - rad + (j + 0.5) * h);
                const Eigen::Vector2d gp = grad_psi(x);
                if (gp.squaredNorm() == 0.0) {
                    continue;
                }
                const Eigen::VectorXd ux = u(x);
                for (int jj = 0; jj < 2; ++jj) {
                    weak -= h * h * gp(jj) * coef.dot(op.coefficients()[jj] * ux);
                }
            }
        }
        double strong = 0.0;
        for (const auto& piece : f.mu.singular_pieces()) {
            strong += piece_pairing(piece, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                return coef * psi(x);
            });
        }
        INFO("test function " << t);
        CHECK(strong == doctest::Approx(weak).epsilon(1e-3).scale(coef.norm() * rad));
    }
}

TEST_CASE("piecewise specs are validated")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 32, -1.0, 1.0);
    PiecewiseKernelSpec spec = vertical_jump();
    PolynomialField bad(2, 2);
    bad.add_term(0, {1, 0}, 1.0); // u1 = x1 is not rigid
    spec.pieces[0].field = bad;
    CHECK_THROWS_AS(realize(FieldSpec{FieldKind{spec}, g}, op), SpecError);

    PiecewiseKernelSpec gap = vertical_jump();
    gap.pieces[1].region.constraints[0].offset = -0.5; // x1 >= 0.5 leaves a strip uncovered
    CHECK_THROWS_AS(realize(FieldSpec{FieldKind{gap}, g}, op), SpecError);
}

TEST_CASE("band-limited field has an exact gradient and no singular part")
{
    const BandLimitedField f(2, 2, 2, 1.0, 9, Eigen::Vector2d(-1, -1), Eigen::Vector2d(2, 2));
    const Eigen::Vector2d x(0.31, -0.42);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        const Eigen::Vector2d e = Eigen::Vector2d::Unit(j) * h;
        const Eigen::VectorXd fd = (f.value(x + e) - f.value(x - e)) / (2 * h);
        CHECK((fd - f.gradient(x).col(j)).norm() < 1e-7);
    }
    const GridGeometry g = GridGeometry::cube(2, 64, -1.0, 1.0, true);
    const RealizedField rf = realize(FieldSpec{FieldKind{BandLimitedSpec{9, 2, 1.0}}, g}, symmetric_gradient(2));
    CHECK(rf.mu.singular_pieces().empty());
    double mean = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        mean += rf.u.at(p, 0);
    }
    CHECK(std::abs(mean / static_cast<double>(g.size())) < 1e-12);
}

TEST_CASE("mollification: constants, affine fields, translations")
{
    const GridGeometry g = GridGeometry::cube(2, 64, -1.0, 1.0, true);
    const GridField one = GridField::sample(g, 1, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); });
    CHECK((mollify(one, 0.1).max_abs() - 1.0) < 1e-12);

    const GridGeometry box = GridGeometry::cube(2, 64, -1.0, 1.0, false);
    const GridField affine = GridField::sample(box, 1, [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, 0.5 + 2.0 * x(0) - x(1));
    });
    const GridField ma = mollify(affine, 0.1);
    const std::size_t mid = box.flat_index({32, 20});
    CHECK(ma.at(mid, 0) == doctest::Approx(affine.at(mid, 0)).epsilon(1e-12));
    CHECK(mollify_at(affine, mid, 0.1)(0) == doctest::Approx(ma.at(mid, 0)).epsilon(1e-12));

    const GridField wave = GridField::sample(g, 1, [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, std::sin(std::numbers::pi * x(0)) * std::cos(3 * std::numbers::pi * x(1)));
    });
    GridField a = mollify(wave.shifted(0, 5), 0.12);
    const GridField b = mollify(wave, 0.12).shifted(0, 5);
    a -= b;
    CHECK(a.max_abs() < 1e-13);
    CHECK(mollify(wave, 0.12).max_abs() <= wave.max_abs() + 1e-14);
    CHECK_THROWS_AS(mollify(wave, 0.02), ResolutionError);
}

TEST_CASE("mollified piecewise field spreads the jump into an absolutely continuous density")
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const auto inner = std::make_shared<FieldKind>(FieldKind{vertical_jump()});
    const RealizedField f = realize(FieldSpec{FieldKind{MollifiedSpec{inner, 0.1}}, g}, op);
    CHECK(f.mu.singular_pieces().empty());
    // total variation of the smeared density over a ball containing the support
    // of the smeared jump equals |density| * chord length of the original jump
    const Ball ball(Eigen::Vector2d(0.0, 0.0), 0.5);
    const double chord = 2.0 * std::sqrt(0.25 - 0.0);
    const double expected = std::sqrt(0.5) * chord; // |[0, .5, .5, 0]| = 1/sqrt(2)
    CHECK(f.mu.total_variation(ball).total() == doctest::Approx(expected).epsilon(0.15));
    CHECK(pointwise(FieldKind{MollifiedSpec{inner, 0.1}}, op, g) == std::nullopt);
}

TEST_CASE("field kinds and geometries round trip through json")
{
    const Operator op = symmetric_gradient(2);
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(1.0, 0.2), 0.1}};
    SumSpec sum;
    sum.terms.push_back(std::make_shared<FieldKind>(FieldKind{random_piecewise_kernel(op, cuts, 4)}));
    sum.terms.push_back(std::make_shared<FieldKind>(FieldKind{BandLimitedSpec{3, 1, 0.5}}));
    const FieldKind kind{MollifiedSpec{std::make_shared<FieldKind>(FieldKind{sum}), 0.05}};
    const nlohmann::json j = to_json(kind);
    CHECK(to_json(field_kind_from_json(j)) == j);
    const GridGeometry g = GridGeometry::cube(3, 16, -2.0, 1.0, true);
    CHECK(geometry_from_json(to_json(g)) == g);
    CHECK_THROWS(field_kind_from_json(nlohmann::json{{"kind", "fractal"}}));
}
