#include "bvlab/polynomial.hpp"

#include <cmath>
#include <numeric>

#include "bvlab/errors.hpp"
#include "bvlab/operator.hpp"

namespace bvlab {

int total_degree(const MultiIndex& alpha)
{
    return std::accumulate(alpha.begin(), alpha.end(), 0);
}

namespace {

void enumerate(int n, int remaining, int var, MultiIndex& current, std::vector<MultiIndex>& out)
{
    if (var == n - 1) {
        current[static_cast<std::size_t>(var)] = remaining;
        out.push_back(current);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        current[static_cast<std::size_t>(var)] = k;
        enumerate(n, remaining - k, var + 1, current, out);
    }
}

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

} // namespace

std::vector<MultiIndex> monomials_of_degree(int n, int d)
{
    if (n < 1 || d < 0) {
        throw InputError("monomials_of_degree: need n >= 1 and d >= 0");
    }
    std::vector<MultiIndex> out;
    MultiIndex current(static_cast<std::size_t>(n), 0);
    enumerate(n, d, 0, current, out);
    return out;
}

std::vector<MultiIndex> monomials_up_to(int n, int d)
{
    std::vector<MultiIndex> out;
    for (int k = 0; k <= d; ++k) {
        auto part = monomials_of_degree(n, k);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

PolynomialField::PolynomialField(int n, int value_dim) : n_(n), value_dim_(value_dim)
{
    if (n < 1 || value_dim < 1) {
        throw InputError("PolynomialField needs n >= 1 and value_dim >= 1");
    }
}

PolynomialField PolynomialField::monomial(int n, int value_dim, int component, const MultiIndex& alpha, double c)
{
    PolynomialField p(n, value_dim);
    p.add_term(component, alpha, c);
    return p;
}

PolynomialField PolynomialField::constant(int n, const Eigen::VectorXd& value)
{
    PolynomialField p(n, static_cast<int>(value.size()));
    p.add_term(MultiIndex(static_cast<std::size_t>(n), 0), value);
    return p;
}

PolynomialField PolynomialField::affine(const Eigen::VectorXd& b, const Eigen::MatrixXd& m)
{
    const int n = static_cast<int>(m.cols());
    PolynomialField p = constant(n, b);
    for (int j = 0; j < n; ++j) {
        MultiIndex e(static_cast<std::size_t>(n), 0);
        e[static_cast<std::size_t>(j)] = 1;
        p.add_term(e, m.col(j));
    }
    return p;
}

int PolynomialField::degree() const
{
    int deg = -1;
    for (const auto& [alpha, c] : terms_) {
        if (c.cwiseAbs().maxCoeff() != 0.0) {
            deg = std::max(deg, total_degree(alpha));
        }
    }
    return deg;
}

double PolynomialField::coefficient(int component, const MultiIndex& alpha) const
{
    const auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second(component);
}

void PolynomialField::add_term(int component, const MultiIndex& alpha, double c)
{
    if (component < 0 || component >= value_dim_) {
        throw InputError("component index out of range");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(value_dim_);
    v(component) = c;
    add_term(alpha, v);
}

void PolynomialField::add_term(const MultiIndex& alpha, const Eigen::VectorXd& c)
{
    if (static_cast<int>(alpha.size()) != n_) {
        throw InputError("multi-index has wrong length");
    }
    if (c.size() != value_dim_) {
        throw InputError("coefficient vector has wrong length");
    }
    for (int a : alpha) {
        if (a < 0) {
            throw InputError("negative exponent in multi-index");
        }
    }
    auto [it, inserted] = terms_.try_emplace(alpha, c);
    if (!inserted) {
        it->second += c;
    }
}

Eigen::VectorXd PolynomialField::operator()(const Eigen::VectorXd& x) const
{
    if (x.size() != n_) {
        throw InputError("evaluation point has wrong dimension");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(value_dim_);
    for (const auto& [alpha, c] : terms_) {
        double m = 1.0;
        for (int i = 0; i < n_; ++i) {
            for (int k = 0; k < alpha[static_cast<std::size_t>(i)]; ++k) {
                m *= x(i);
            }
        }
        out += m * c;
    }
    return out;
}

PolynomialField PolynomialField::derivative(int j) const
{
    if (j < 0 || j >= n_) {
        throw InputError("derivative direction out of range");
    }
    PolynomialField d(n_, value_dim_);
    for (const auto& [alpha, c] : terms_) {
        const int a = alpha[static_cast<std::size_t>(j)];
        if (a == 0) {
            continue;
        }
        MultiIndex beta = alpha;
        beta[static_cast<std::size_t>(j)] -= 1;
        d.add_term(beta, static_cast<double>(a) * c);
    }
    return d;
}

PolynomialField PolynomialField::compose_affine(double scale, const Eigen::VectorXd& offset) const
{
    if (offset.size() != n_) {
        throw InputError("offset has wrong dimension");
    }
    PolynomialField out(n_, value_dim_);
    for (const auto& [alpha, c] : terms_) {
        // prod_i (scale y_i + offset_i)^{alpha_i}, expanded binomially
        std::vector<std::pair<MultiIndex, double>> partial{{MultiIndex(static_cast<std::size_t>(n_), 0), 1.0}};
        for (int i = 0; i < n_; ++i) {
            const int a = alpha[static_cast<std::size_t>(i)];
            std::vector<std::pair<MultiIndex, double>> next;
            for (const auto& [beta, w] : partial) {
                for (int k = 0; k <= a; ++k) {
                    const double f = binomial(a, k) * std::pow(scale, k) * std::pow(offset(i), a - k);
                    if (f == 0.0) {
                        continue;
                    }
                    MultiIndex gamma = beta;
                    gamma[static_cast<std::size_t>(i)] = k;
                    next.emplace_back(std::move(gamma), w * f);
                }
            }
            partial = std::move(next);
        }
        for (const auto& [beta, w] : partial) {
            out.add_term(beta, w * c);
        }
    }
    return out;
}

PolynomialField PolynomialField::transformed(const Eigen::MatrixXd& l) const
{
    if (l.cols() != value_dim_) {
        throw InputError("transformed: matrix has wrong number of columns");
    }
    PolynomialField out(n_, static_cast<int>(l.rows()));
    for (const auto& [alpha, c] : terms_) {
        out.add_term(alpha, l * c);
    }
    return out;
}

PolynomialField PolynomialField::homogeneous_part(int d) const
{
    PolynomialField out(n_, value_dim_);
    for (const auto& [alpha, c] : terms_) {
        if (total_degree(alpha) == d) {
            out.add_term(alpha, c);
        }
    }
    return out;
}

double PolynomialField::coefficient_norm() const
{
    double s = 0.0;
    for (const auto& [alpha, c] : terms_) {
        s += c.squaredNorm();
    }
    return std::sqrt(s);
}

double PolynomialField::coefficient_max() const
{
    double m = 0.0;
    for (const auto& [alpha, c] : terms_) {
        m = std::max(m, c.cwiseAbs().maxCoeff());
    }
    return m;
}

Eigen::VectorXd PolynomialField::coefficient_vector(const std::vector<MultiIndex>& order) const
{
    const auto m = static_cast<Eigen::Index>(order.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(value_dim_ * m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto it = terms_.find(order[static_cast<std::size_t>(k)]);
        if (it == terms_.end()) {
            continue;
        }
        for (int c = 0; c < value_dim_; ++c) {
            out(c * m + k) = it->second(c);
        }
    }
    return out;
}

PolynomialField PolynomialField::from_coefficient_vector(int n, int value_dim, const std::vector<MultiIndex>& order,
                                                         const Eigen::VectorXd& coeffs)
{
    const auto m = static_cast<Eigen::Index>(order.size());
    if (coeffs.size() != value_dim * m) {
        throw InputError("coefficient vector length does not match the monomial order");
    }
    PolynomialField p(n, value_dim);
    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::VectorXd c(value_dim);
        for (int comp = 0; comp < value_dim; ++comp) {
            c(comp) = coeffs(comp * m + k);
        }
        if (c.cwiseAbs().maxCoeff() != 0.0) {
            p.add_term(order[static_cast<std::size_t>(k)], c);
        }
    }
    return p;
}

void PolynomialField::check_compatible(const PolynomialField& other) const
{
    if (other.n_ != n_ || other.value_dim_ != value_dim_) {
        throw InputError("polynomial fields have different shapes");
    }
}

PolynomialField& PolynomialField::operator+=(const PolynomialField& other)
{
    check_compatible(other);
    for (const auto& [alpha, c] : other.terms_) {
        add_term(alpha, c);
    }
    return *this;
}

PolynomialField& PolynomialField::operator-=(const PolynomialField& other)
{
    check_compatible(other);
    for (const auto& [alpha, c] : other.terms_) {
        add_term(alpha, -c);
    }
    return *this;
}

PolynomialField& PolynomialField::operator*=(double s)
{
    for (auto& [alpha, c] : terms_) {
        c *= s;
    }
    return *this;
}

PolynomialField operator+(PolynomialField a, const PolynomialField& b)
{
    a += b;
    return a;
}

PolynomialField operator-(PolynomialField a, const PolynomialField& b)
{
    a -= b;
    return a;
}

PolynomialField operator*(double s, PolynomialField p)
{
    p *= s;
    return p;
}

nlohmann::json PolynomialField::to_json() const
{
    nlohmann::json j;
    j["n"] = n_;
    j["dim"] = value_dim_;
    auto terms = nlohmann::json::array();
    for (const auto& [alpha, c] : terms_) {
        std::vector<double> coeffs(c.data(), c.data() + c.size());
        terms.push_back({{"alpha", alpha}, {"c", coeffs}});
    }
    j["terms"] = std::move(terms);
    return j;
}

PolynomialField PolynomialField::from_json(const nlohmann::json& j)
{
    try {
        PolynomialField p(j.at("n").get<int>(), j.at("dim").get<int>());
        for (const auto& t : j.at("terms")) {
            const auto alpha = t.at("alpha").get<MultiIndex>();
            const auto c = t.at("c").get<std::vector<double>>();
            p.add_term(alpha, Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("polynomial: ") + e.what());
    }
}

PolynomialField apply_to_polynomial(const Operator& op, const PolynomialField& p)
{
    if (p.n() != op.n() || p.value_dim() != op.dim_v()) {
        throw InputError("apply_to_polynomial: polynomial shape does not match the operator");
    }
    PolynomialField out(op.n(), op.dim_w());
    for (int j = 0; j < op.n(); ++j) {
        out += p.derivative(j).transformed(op.coefficient(j));
    }
    return out;
}

} // namespace bvlab
