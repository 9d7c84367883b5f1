#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace bvlab {

class Operator;

using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& alpha);

/// Multi-indices of total degree exactly d in n variables, graded
/// lexicographic order (x1^d first).
std::vector<MultiIndex> monomials_of_degree(int n, int d);

/// All multi-indices with total degree <= d, degree by degree.
std::vector<MultiIndex> monomials_up_to(int n, int d);

/// Vector-valued polynomial on R^n stored as a sparse table
/// multi-index -> coefficient vector (one entry per value component).
class PolynomialField {
public:
    PolynomialField(int n, int value_dim);

    static PolynomialField monomial(int n, int value_dim, int component, const MultiIndex& alpha, double c = 1.0);
    /// Constant field with the given value.
    static PolynomialField constant(int n, const Eigen::VectorXd& value);
    /// x -> b + M x
    static PolynomialField affine(const Eigen::VectorXd& b, const Eigen::MatrixXd& m);

    int n() const { return n_; }
    int value_dim() const { return value_dim_; }

    /// Largest |alpha| carrying a nonzero coefficient; -1 for the zero field.
    int degree() const;
    bool is_zero() const { return degree() < 0; }

    double coefficient(int component, const MultiIndex& alpha) const;
    void add_term(int component, const MultiIndex& alpha, double c);
    void add_term(const MultiIndex& alpha, const Eigen::VectorXd& c);
    const std::map<MultiIndex, Eigen::VectorXd>& terms() const { return terms_; }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

    PolynomialField derivative(int j) const;

    /// y -> p(scale * y + offset)
    PolynomialField compose_affine(double scale, const Eigen::VectorXd& offset) const;
    /// z -> p(c + z)
    PolynomialField shifted(const Eigen::VectorXd& c) const { return compose_affine(1.0, c); }

    /// Pointwise linear map of the values: y -> L p(y).
    PolynomialField transformed(const Eigen::MatrixXd& l) const;

    /// Homogeneous part of degree d.
    PolynomialField homogeneous_part(int d) const;

    /// Euclidean norm of all coefficients.
    double coefficient_norm() const;
    double coefficient_max() const;

    /// Coefficients stacked component-major against the given monomial order.
    Eigen::VectorXd coefficient_vector(const std::vector<MultiIndex>& order) const;
    static PolynomialField from_coefficient_vector(int n, int value_dim, const std::vector<MultiIndex>& order,
                                                   const Eigen::VectorXd& coeffs);

    PolynomialField& operator+=(const PolynomialField& other);
    PolynomialField& operator-=(const PolynomialField& other);
    PolynomialField& operator*=(double s);

    nlohmann::json to_json() const;
    static PolynomialField from_json(const nlohmann::json& j);

private:
    void check_compatible(const PolynomialField& other) const;

    int n_;
    int value_dim_;
    std::map<MultiIndex, Eigen::VectorXd> terms_;
};

PolynomialField operator+(PolynomialField a, const PolynomialField& b);
PolynomialField operator-(PolynomialField a, const PolynomialField& b);
PolynomialField operator*(double s, PolynomialField p);

/// Exact application of the operator: sum_j A_j d_j p. The result is W-valued
/// and of degree deg(p) - 1 (or zero).
PolynomialField apply_to_polynomial(const Operator& op, const PolynomialField& p);

} // namespace bvlab
