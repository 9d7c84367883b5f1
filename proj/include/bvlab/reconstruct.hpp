#pragma once

/*
 * Elliptic reconstruction u = K * A u on periodic grids.
 *
 * The transform of A u is i A[xi] u^, so for elliptic A the multiplier
 *
 *     m(xi) = -i (A[xi]^T A[xi])^{-1} A[xi]^T      (real xi != 0)
 *
 * is a left inverse of i A[xi] and recovers u^ from (A u)^ at every nonzero
 * frequency. On the torus the zero mode of u is not determined by A u;
 * reconstructions are mean-free by convention.
 */

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/grid.hpp"
#include "bvlab/operator.hpp"
#include "json.hpp"

namespace bvlab {

class FourierMultiplier {
public:
    /// Throws PreconditionError unless the real ellipticity margin exceeds `tolerance`.
    explicit FourierMultiplier(Operator op, double tolerance = 1e-8);

    const Operator& op() const { return op_; }
    double margin() const { return margin_; }

    /// m(xi), dimV x dimW. Throws DomainError for xi = 0.
    Eigen::MatrixXcd operator()(const Eigen::VectorXd& xi) const;

    /// max-entry norm of m(xi) (i A[xi]) - Id.
    double left_inverse_residual(const Eigen::VectorXd& xi) const;

private:
    Operator op_;
    double margin_;
};

/// One-shot evaluation (runs the ellipticity certificate every call).
Eigen::MatrixXcd multiplier_eval(const Operator& op, const Eigen::VectorXd& xi);

/// Angular wave vector 2 pi k / L of every grid frequency, in FFT order;
/// the Nyquist index of an even axis is flagged by `nyquist`.
struct Frequency {
    Eigen::VectorXd xi;
    bool nyquist = false;
};
std::vector<Frequency> grid_frequencies(const GridGeometry& g);

/// Spectral A u on a periodic grid (Nyquist modes dropped).
GridField spectral_apply(const Operator& op, const GridField& u);

struct Reconstruction {
    GridField u;
    /// max |Im| / max |Re| after the inverse transform.
    double imag_residue = 0.0;
};

/// u^(k) = m(2 pi k / L) g^(k) for k != 0, zero mean. Throws NotInRangeError
/// when |mean g| exceeds 1e-8 max |g| and InputError for box grids.
Reconstruction fourier_reconstruct(const FourierMultiplier& m, const GridField& g);
Reconstruction fourier_reconstruct(const Operator& op, const GridField& g);

GridField mean_free(const GridField& u);

/// ||a - b||_2 / ||b||_2 over the grid (absolute when b = 0).
double relative_l2_error(const GridField& a, const GridField& b);

struct HomogeneityReport {
    std::vector<double> lambdas;
    std::vector<double> residuals; ///< per lambda, max over directions
    double max_residual = 0.0;
    int cells = 0;
    double sample_distance = 0.0; ///< |x| of the base samples
    double source_width = 0.0;    ///< mollified point source radius

    nlohmann::json to_json() const;
};

/// Samples the physical kernel by reconstructing from a mollified point
/// source (radius `width_cells` cells) on a periodic [-1, 1]^n grid with
/// `cells` cells per axis, and compares |K(lambda x) lambda^{n-1} - K(x)|
/// with |K(x)| at |x| = `sample_cells` cells along each direction.
HomogeneityReport kernel_homogeneity_check(const Operator& op, const std::vector<Eigen::VectorXd>& directions,
                                           const std::vector<double>& lambdas, int cells = 512, int sample_cells = 16,
                                           int width_cells = 4);

} // namespace bvlab
