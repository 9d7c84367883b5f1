#pragma once

/*
 * First-order, homogeneous, constant-coefficient differential operators
 *
 *     A u = sum_j A_j d_j u,    u : R^n -> V,  A_j in L(V, W),
 *
 * their Fourier symbols A[xi] = sum_j xi_j A_j, and numerical certificates
 * of (real and complex) ellipticity obtained by minimizing the smallest
 * singular value of the symbol over the unit sphere.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace bvlab {

class Operator {
public:
    /// Throws InputError unless there is at least one matrix, all matrices
    /// share one non-empty shape and all entries are finite.
    explicit Operator(std::vector<Eigen::MatrixXd> coefficients, std::string name = "custom");

    int n() const { return static_cast<int>(coefficients_.size()); }
    int dim_v() const { return static_cast<int>(coefficients_.front().cols()); }
    int dim_w() const { return static_cast<int>(coefficients_.front().rows()); }
    const std::string& name() const { return name_; }

    const Eigen::MatrixXd& coefficient(int j) const { return coefficients_.at(static_cast<std::size_t>(j)); }
    std::span<const Eigen::MatrixXd> coefficients() const { return coefficients_; }

    /// A(M) = sum_j A_j M e_j for M in V (x) R^n stored as a dimV x n matrix.
    Eigen::VectorXd apply_to_gradient(const Eigen::MatrixXd& gradient) const;

    /// Same operator with every A_j replaced by A_j * basis_change.
    Operator with_v_basis(const Eigen::MatrixXd& basis_change) const;

    nlohmann::json to_json() const;

private:
    std::vector<Eigen::MatrixXd> coefficients_;
    std::string name_;
};

// Built-in operators. W-valued matrices are flattened row-major, so the
// (a, b) entry of a matrix-valued output sits at index a * n + b.
Operator gradient(int n, int components = 1);
Operator symmetric_gradient(int n);
Operator wirtinger();
Operator divergence(int n);

/// Builds one of `gradient`, `symmetric_gradient`, `wirtinger`, `divergence`.
Operator builtin_operator(const std::string& name, int n, int dim_v = 1);

/// {"n": .., "dimV": .., "dimW": .., "A": [[row-major entries], ...]}
Operator operator_from_json(const nlohmann::json& j);
Operator load_operator_file(const std::filesystem::path& path);

struct SymbolMatrix {
    Eigen::VectorXcd xi;
    Eigen::MatrixXcd value;
};

SymbolMatrix symbol(const Operator& op, const Eigen::VectorXcd& xi);
Eigen::MatrixXd real_symbol(const Operator& op, const Eigen::VectorXd& xi);

/// Smallest singular value of a (possibly wide) matrix seen as a map on its
/// domain; zero when the matrix has more columns than rows.
double smallest_singular_value(const Eigen::MatrixXcd& m);

struct SphereSearchConfig {
    int samples = 2048;
    int refinement_iterations = 400;
    int starts = 6;
    std::uint64_t seed = 20190521;
    double tolerance = 1e-7;
};

struct EllipticityReport {
    double real_margin = 0.0;
    double complex_margin = 0.0;
    Eigen::VectorXd real_argmin;
    Eigen::VectorXcd complex_argmin;
    /// Unit vector v minimizing |A[xi] v| at complex_argmin.
    Eigen::VectorXcd complex_null_vector;
    int sample_count = 0;
    int refinement_iterations = 0;
    double tolerance = 1e-7;

    bool elliptic() const { return real_margin > tolerance; }
    bool complex_elliptic() const { return complex_margin > tolerance; }
    nlohmann::json to_json() const;
};

/// Real part only: min over the real unit sphere of sigma_min(A[xi]).
EllipticityReport ellipticity_margin(const Operator& op, const SphereSearchConfig& cfg = {});

/// Both margins. The complex search is seeded with the real minimizer, so
/// complex_margin <= real_margin always holds.
EllipticityReport complex_ellipticity_margin(const Operator& op, const SphereSearchConfig& cfg = {});

struct NullWitness {
    Eigen::VectorXd xi;
    Eigen::VectorXd v;
    double residual = 0.0; ///< |A[xi] v|
};

/// (xi, v) with |xi| = |v| = 1 and A[xi] v ~ 0 when the real margin is below
/// tolerance; every u(x) = f(x . xi) v is then annihilated by the operator.
std::optional<NullWitness> directional_null_witness(const Operator& op, const SphereSearchConfig& cfg = {});

} // namespace bvlab
