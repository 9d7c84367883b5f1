#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/operator.hpp"
#include "bvlab/polynomial.hpp"
#include "json.hpp"

namespace bvlab {

/// Matrix of p -> A p restricted to homogeneous V-valued polynomials of
/// degree d. Columns follow PolynomialField::coefficient_vector against
/// monomials_of_degree(n, d); rows the same against degree d - 1 (no rows
/// when d = 0).
Eigen::MatrixXd homogeneous_coefficient_map(const Operator& op, int d);

/// Basis (unit coefficient norm) of the homogeneous degree-d polynomials
/// annihilated by the operator. Singular values below rank_tol * sigma_max
/// count as zero.
std::vector<PolynomialField> homogeneous_kernel_basis(const Operator& op, int d, double rank_tol = 1e-10);

struct NullspaceReport {
    std::vector<int> dims_per_degree;
    int degree_cap = 0;
    /// Smallest l with all dims zero on (l, cap]; present only with FDN.
    std::optional<int> stabilization_degree;
    bool fdn = false;
    int total_dim = 0;
    /// The guard band test is a heuristic: it cannot exclude kernel elements beyond the cap.
    bool heuristic = true;
    double complex_margin = 0.0;
    bool complex_elliptic = false;
    bool cross_check_agrees = false;

    std::string verdict() const; ///< "FDN(l=1, totalDim=3)" or "NotFdnUpTo(8)"
    nlohmann::json to_json() const;
};

/// Kernel dimensions for degrees 0..cap with a guard band of at least two
/// trailing zero degrees for the FDN verdict; cross-checked against the
/// complex ellipticity margin.
NullspaceReport fdn_report(const Operator& op, int degree_cap = 8, const SphereSearchConfig& cfg = {});

/// Basis of the full (polynomial) null-space, degrees 0..l. Throws
/// PreconditionError when the report does not certify FDN.
std::vector<PolynomialField> kernel_basis(const Operator& op, const NullspaceReport& report);

/// fdn_report + kernel_basis.
std::vector<PolynomialField> kernel_basis(const Operator& op, int degree_cap = 8);

} // namespace bvlab
