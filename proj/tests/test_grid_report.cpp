#include "doctest.h"

#include <cstdlib>
#include <sstream>

#include "bvlab/errors.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/report.hpp"

using namespace bvlab;

TEST_CASE("flat and multi indices are inverse to each other")
{
    const GridGeometry g({5, 7, 3}, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 2, 3));
    for (std::size_t p = 0; p < g.size(); ++p) {
        CHECK(g.flat_index(g.multi_index(p)) == p);
    }
    CHECK(g.spacing(1) == doctest::Approx(2.0 / 7.0));
    const GridGeometry t = GridGeometry::cube(1, 8, 0.0, 1.0, true);
    CHECK(t.neighbor(0, 0, -1) == 7);
}

TEST_CASE("centred differences are exact on quadratics")
{
    const GridGeometry g = GridGeometry::cube(2, 32, -1.0, 1.0);
    const GridField u = GridField::sample(g, 2, [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(x(0) * x(0) - 3 * x(0) * x(1), 2 * x(1) * x(1) + x(0));
    });
    const std::size_t p = g.flat_index({10, 17});
    const Eigen::VectorXd x = g.position(p);
    Eigen::Matrix2d exact;
    exact << 2 * x(0) - 3 * x(1), -3 * x(0), 1.0, 4 * x(1);
    CHECK((finite_difference_gradient(u, p) - exact).norm() < 1e-12);

    const GridField eu = apply_operator_fd(symmetric_gradient(2), u);
    const Eigen::Matrix2d s = 0.5 * (exact + exact.transpose());
    CHECK(eu.at(p, 1) == doctest::Approx(s(0, 1)));
}

TEST_CASE("multilinear interpolation reproduces bilinear fields")
{
    const GridGeometry g = GridGeometry::cube(2, 16, 0.0, 1.0);
    const GridField u = GridField::sample(g, 1, [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, 1.0 + 2 * x(0) - x(1) + 3 * x(0) * x(1));
    });
    const Eigen::Vector2d y(0.4137, 0.7321);
    CHECK(u.interpolate(y)(0) == doctest::Approx(1.0 + 2 * y(0) - y(1) + 3 * y(0) * y(1)));
}

TEST_CASE("binary grid files round trip bit for bit")
{
    const GridGeometry g({4, 6}, Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 3), true);
    const GridField u = GridField::sample(g, 3, [](const Eigen::VectorXd& x) {
        return Eigen::Vector3d(std::sin(x(0)), x(1) / 3.0, 1e-300 * x(0));
    });
    std::stringstream ss;
    write_grid_binary(u, ss);
    const GridField back = read_grid_binary(ss);
    CHECK(back.geometry() == g);
    CHECK(back.data() == u.data());
    std::stringstream truncated(ss.str().substr(0, 10));
    CHECK_THROWS(read_grid_binary(truncated));
}

TEST_CASE("doubles are printed so that they round trip")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("config hash ignores key order and csv writer enforces the column count")
{
    const nlohmann::json a = nlohmann::json::parse(R"({"seed": 1, "n": 2})");
    const nlohmann::json b = nlohmann::json::parse(R"({"n": 2, "seed": 1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(nlohmann::json::parse(R"({"n": 2, "seed": 2})")));
    CHECK(hex(255).size() == 16);

    std::ostringstream out;
    CsvWriter csv(out, {"a", "b"}, 0x1234, 7);
    csv.row({"1", "2"});
    CHECK_THROWS_AS(csv.row({"1"}), InputError);
    CHECK(csv.rows() == 1);
    const std::string text = out.str();
    CHECK(text.find("a,b") != std::string::npos);
    CHECK(text.find("seed=7") != std::string::npos);
    CHECK(text.find("1,2") != std::string::npos);
}
