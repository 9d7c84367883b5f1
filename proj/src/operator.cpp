#include "bvlab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "bvlab/errors.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

Operator::Operator(std::vector<Eigen::MatrixXd> coefficients, std::string name)
    : coefficients_(std::move(coefficients)), name_(std::move(name))
{
    if (coefficients_.empty()) {
        throw InputError("operator needs at least one coefficient matrix");
    }
    const auto rows = coefficients_.front().rows();
    const auto cols = coefficients_.front().cols();
    if (rows == 0 || cols == 0) {
        throw InputError("coefficient matrices must be non-empty");
    }
    for (std::size_t j = 0; j < coefficients_.size(); ++j) {
        const auto& a = coefficients_[j];
        if (a.rows() != rows || a.cols() != cols) {
            throw InputError("coefficient matrix " + std::to_string(j) + " has shape "
                             + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", expected "
                             + std::to_string(rows) + "x" + std::to_string(cols));
        }
        if (!a.allFinite()) {
            throw InputError("coefficient matrix " + std::to_string(j) + " has non-finite entries");
        }
    }
}

Eigen::VectorXd Operator::apply_to_gradient(const Eigen::MatrixXd& gradient) const
{
    if (gradient.rows() != dim_v() || gradient.cols() != n()) {
        throw InputError("gradient matrix must be dimV x n");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_w());
    for (int j = 0; j < n(); ++j) {
        out += coefficients_[static_cast<std::size_t>(j)] * gradient.col(j);
    }
    return out;
}

Operator Operator::with_v_basis(const Eigen::MatrixXd& basis_change) const
{
    if (basis_change.rows() != dim_v() || basis_change.cols() != dim_v()) {
        throw InputError("basis change must be dimV x dimV");
    }
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(coefficients_.size());
    for (const auto& a : coefficients_) {
        mats.emplace_back(a * basis_change);
    }
    return Operator(std::move(mats), name_ + "*");
}

nlohmann::json Operator::to_json() const
{
    nlohmann::json j;
    j["name"] = name_;
    j["n"] = n();
    j["dimV"] = dim_v();
    j["dimW"] = dim_w();
    auto mats = nlohmann::json::array();
    for (const auto& a : coefficients_) {
        auto flat = nlohmann::json::array();
        for (int r = 0; r < a.rows(); ++r) {
            for (int c = 0; c < a.cols(); ++c) {
                flat.push_back(a(r, c));
            }
        }
        mats.push_back(std::move(flat));
    }
    j["A"] = std::move(mats);
    return j;
}

Operator gradient(int n, int components)
{
    if (n < 1 || components < 1) {
        throw InputError("gradient needs n >= 1 and at least one component");
    }
    std::vector<Eigen::MatrixXd> mats;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(components * n, components);
        for (int c = 0; c < components; ++c) {
            a(c * n + j, c) = 1.0;
        }
        mats.push_back(std::move(a));
    }
    return Operator(std::move(mats), "gradient");
}

Operator symmetric_gradient(int n)
{
    if (n < 1) {
        throw InputError("symmetric_gradient needs n >= 1");
    }
    std::vector<Eigen::MatrixXd> mats;
    for (int j = 0; j < n; ++j) {
        // (A_j v)_{ab} = (v_a delta_bj + delta_aj v_b) / 2
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * n, n);
        for (int c = 0; c < n; ++c) {
            a(c * n + j, c) += 0.5;
            a(j * n + c, c) += 0.5;
        }
        mats.push_back(std::move(a));
    }
    return Operator(std::move(mats), "symmetric_gradient");
}

Operator wirtinger()
{
    // du = ((d1 u1 + d2 u2) / 2, (d2 u1 - d1 u2) / 2)
    Eigen::MatrixXd a1(2, 2);
    a1 << 0.5, 0.0, 0.0, -0.5;
    Eigen::MatrixXd a2(2, 2);
    a2 << 0.0, 0.5, 0.5, 0.0;
    return Operator({a1, a2}, "wirtinger");
}

Operator divergence(int n)
{
    if (n < 1) {
        throw InputError("divergence needs n >= 1");
    }
    std::vector<Eigen::MatrixXd> mats;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, n);
        a(0, j) = 1.0;
        mats.push_back(std::move(a));
    }
    return Operator(std::move(mats), "divergence");
}

Operator builtin_operator(const std::string& name, int n, int dim_v)
{
    if (name == "gradient") {
        return gradient(n, dim_v);
    }
    if (name == "symmetric_gradient") {
        return symmetric_gradient(n);
    }
    if (name == "wirtinger") {
        if (n != 2) {
            throw InputError("wirtinger is defined for n = 2 only");
        }
        return wirtinger();
    }
    if (name == "divergence") {
        return divergence(n);
    }
    throw InputError("unknown builtin operator '" + name + "'");
}

Operator operator_from_json(const nlohmann::json& j)
{
    try {
        const int n = j.at("n").get<int>();
        const int dim_v = j.at("dimV").get<int>();
        const int dim_w = j.at("dimW").get<int>();
        const auto& mats = j.at("A");
        if (n < 1 || dim_v < 1 || dim_w < 1) {
            throw InputError("n, dimV and dimW must be positive");
        }
        if (!mats.is_array() || static_cast<int>(mats.size()) != n) {
            throw InputError("field A must list exactly n = " + std::to_string(n) + " matrices");
        }
        std::vector<Eigen::MatrixXd> out;
        for (std::size_t k = 0; k < mats.size(); ++k) {
            const auto& flat = mats[k];
            if (!flat.is_array() || static_cast<int>(flat.size()) != dim_v * dim_w) {
                throw InputError("matrix " + std::to_string(k) + " must have dimW * dimV = "
                                 + std::to_string(dim_v * dim_w) + " row-major entries");
            }
            Eigen::MatrixXd a(dim_w, dim_v);
            for (int r = 0; r < dim_w; ++r) {
                for (int c = 0; c < dim_v; ++c) {
                    a(r, c) = flat[static_cast<std::size_t>(r * dim_v + c)].get<double>();
                }
            }
            out.push_back(std::move(a));
        }
        return Operator(std::move(out), j.value("name", std::string("custom")));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("operator spec: ") + e.what());
    }
}

Operator load_operator_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open operator file " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // message carries "line L, column C"
        throw ConfigError(path.string() + ": " + e.what());
    }
    return operator_from_json(j);
}

SymbolMatrix symbol(const Operator& op, const Eigen::VectorXcd& xi)
{
    if (xi.size() != op.n()) {
        throw InputError("symbol: xi has length " + std::to_string(xi.size()) + ", expected "
                         + std::to_string(op.n()));
    }
    Eigen::MatrixXcd value = Eigen::MatrixXcd::Zero(op.dim_w(), op.dim_v());
    for (int j = 0; j < op.n(); ++j) {
        value += xi(j) * op.coefficient(j).cast<std::complex<double>>();
    }
    return {xi, value};
}

Eigen::MatrixXd real_symbol(const Operator& op, const Eigen::VectorXd& xi)
{
    if (xi.size() != op.n()) {
        throw InputError("symbol: xi has wrong length");
    }
    Eigen::MatrixXd value = Eigen::MatrixXd::Zero(op.dim_w(), op.dim_v());
    for (int j = 0; j < op.n(); ++j) {
        value += xi(j) * op.coefficient(j);
    }
    return value;
}

namespace {

struct SvdMin {
    double sigma;
    Eigen::VectorXcd vector;
};

SvdMin min_singular(const Eigen::MatrixXcd& m)
{
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
    const auto cols = m.cols();
    if (m.rows() < cols) {
        return {0.0, svd.matrixV().col(cols - 1)};
    }
    const auto& s = svd.singularValues();
    return {s(s.size() - 1), svd.matrixV().col(cols - 1)};
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct SphereMin {
    double value;
    Eigen::VectorXd point;
    int samples;
    int iterations;
};

// Seeded quasi-uniform sampling followed by compass-search refinement on
// the sphere. Candidates are renormalized after every step.
SphereMin minimize_on_sphere(const Objective& f, int dim, const SphereSearchConfig& cfg, std::string_view label,
                             const std::vector<Eigen::VectorXd>& extra_starts)
{
    Rng rng = make_rng(cfg.seed, label);
    std::vector<std::pair<double, Eigen::VectorXd>> pool;
    pool.reserve(static_cast<std::size_t>(cfg.samples + 2 * dim) + extra_starts.size());

    auto add = [&](Eigen::VectorXd x) {
        const double nrm = x.norm();
        if (nrm == 0.0) {
            return;
        }
        x /= nrm;
        pool.emplace_back(f(x), std::move(x));
    };
    for (int i = 0; i < dim; ++i) {
        add(Eigen::VectorXd::Unit(dim, i));
    }
    for (int s = 0; s < cfg.samples; ++s) {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) {
            x(i) = standard_normal(rng);
        }
        add(std::move(x));
    }
    const int sampled = static_cast<int>(pool.size());
    std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::pair<double, Eigen::VectorXd>> starts(
        pool.begin(), pool.begin() + std::min<std::ptrdiff_t>(cfg.starts, static_cast<std::ptrdiff_t>(pool.size())));
    for (const auto& e : extra_starts) {
        Eigen::VectorXd x = e / e.norm();
        starts.emplace_back(f(x), std::move(x));
    }

    SphereMin best{std::numeric_limits<double>::infinity(), Eigen::VectorXd::Zero(dim), sampled, 0};
    int total_iterations = 0;
    for (auto& [fx, x] : starts) {
        double step = 0.25;
        for (int it = 0; it < cfg.refinement_iterations && step > 1e-14; ++it) {
            ++total_iterations;
            bool improved = false;
            for (int i = 0; i < dim; ++i) {
                for (double sign : {1.0, -1.0}) {
                    Eigen::VectorXd cand = x;
                    cand(i) += sign * step;
                    cand.normalize();
                    const double fc = f(cand);
                    if (fc < fx) {
                        fx = fc;
                        x = std::move(cand);
                        improved = true;
                    }
                }
            }
            if (!improved) {
                step *= 0.5;
            }
        }
        if (fx < best.value) {
            best.value = fx;
            best.point = x;
        }
    }
    best.iterations = total_iterations;
    return best;
}

Eigen::VectorXcd to_complex(const Eigen::VectorXd& ab)
{
    const auto n = ab.size() / 2;
    Eigen::VectorXcd xi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        xi(j) = {ab(j), ab(n + j)};
    }
    return xi;
}

} // namespace

double smallest_singular_value(const Eigen::MatrixXcd& m)
{
    return min_singular(m).sigma;
}

nlohmann::json EllipticityReport::to_json() const
{
    auto vec = [](const Eigen::VectorXd& v) {
        auto a = nlohmann::json::array();
        for (double x : v) {
            a.push_back(x);
        }
        return a;
    };
    auto cvec = [](const Eigen::VectorXcd& v) {
        auto a = nlohmann::json::array();
        for (const auto& z : v) {
            a.push_back({z.real(), z.imag()});
        }
        return a;
    };
    nlohmann::json j;
    j["realMargin"] = real_margin;
    j["complexMargin"] = complex_margin;
    j["argminXi"] = vec(real_argmin);
    j["complexArgminXi"] = cvec(complex_argmin);
    j["complexNullVector"] = cvec(complex_null_vector);
    j["sampleCount"] = sample_count;
    j["refinementIterations"] = refinement_iterations;
    j["tolerance"] = tolerance;
    j["elliptic"] = elliptic();
    j["complexElliptic"] = complex_elliptic();
    return j;
}

EllipticityReport ellipticity_margin(const Operator& op, const SphereSearchConfig& cfg)
{
    const auto f = [&op](const Eigen::VectorXd& xi) {
        return min_singular(real_symbol(op, xi).cast<std::complex<double>>()).sigma;
    };
    const auto res = minimize_on_sphere(f, op.n(), cfg, "real-sphere", {});
    EllipticityReport rep;
    rep.real_margin = res.value;
    rep.real_argmin = res.point;
    rep.sample_count = res.samples;
    rep.refinement_iterations = res.iterations;
    rep.tolerance = cfg.tolerance;
    // Unset until the complex search runs; the real value is a valid upper bound.
    rep.complex_margin = res.value;
    rep.complex_argmin = res.point.cast<std::complex<double>>();
    rep.complex_null_vector = min_singular(real_symbol(op, res.point).cast<std::complex<double>>()).vector;
    return rep;
}

EllipticityReport complex_ellipticity_margin(const Operator& op, const SphereSearchConfig& cfg)
{
    EllipticityReport rep = ellipticity_margin(op, cfg);
    const int n = op.n();
    const auto f = [&op](const Eigen::VectorXd& ab) { return min_singular(symbol(op, to_complex(ab)).value).sigma; };
    Eigen::VectorXd real_start = Eigen::VectorXd::Zero(2 * n);
    real_start.head(n) = rep.real_argmin;
    const auto res = minimize_on_sphere(f, 2 * n, cfg, "complex-sphere", {real_start});
    rep.complex_margin = std::min(res.value, rep.real_margin);
    if (res.value <= rep.real_margin) {
        rep.complex_argmin = to_complex(res.point);
        rep.complex_null_vector = min_singular(symbol(op, rep.complex_argmin).value).vector;
    }
    rep.sample_count += res.samples;
    rep.refinement_iterations += res.iterations;
    return rep;
}

std::optional<NullWitness> directional_null_witness(const Operator& op, const SphereSearchConfig& cfg)
{
    const auto rep = ellipticity_margin(op, cfg);
    if (rep.elliptic()) {
        return std::nullopt;
    }
    const Eigen::MatrixXd s = real_symbol(op, rep.real_argmin);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeFullV);
    NullWitness w;
    w.xi = rep.real_argmin;
    w.v = svd.matrixV().col(s.cols() - 1);
    w.residual = (s * w.v).norm();
    return w;
}

} // namespace bvlab
