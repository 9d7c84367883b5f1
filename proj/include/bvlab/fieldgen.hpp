#pragma once

/*
 * Deterministic test fields with known structure.
 *
 *   band_limited      random trigonometric polynomial, periodic on the box
 *   piecewise_kernel  null-space elements on convex polytopes partitioning
 *                     the box; A u is then a pure jump measure on the
 *                     interfaces with density sum_j nu_j A_j [u]
 *   polynomial        a single polynomial field
 *   mollified         an inner field convolved with the standard bump
 *   sum               superposition of fields
 */

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/ballcalc.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measure.hpp"
#include "bvlab/polynomial.hpp"
#include "json.hpp"

namespace bvlab {

class Operator;

/// { x : normal . x <= offset }
struct HalfSpace {
    Eigen::VectorXd normal;
    double offset = 0.0;

    double signed_distance(const Eigen::VectorXd& x) const { return (normal.dot(x) - offset) / normal.norm(); }
};

struct Region {
    std::vector<HalfSpace> constraints;

    /// Non-strict membership; `slack` > 0 enlarges, < 0 shrinks the region.
    bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

struct KernelPiece {
    Region region;
    PolynomialField field;
};

/// Random trigonometric polynomial with integer wave numbers |k|_inf <= band
/// on a box of the given periods, mean free.
class BandLimitedField {
public:
    BandLimitedField(int n, int dim, int band, double amplitude, std::uint64_t seed, Eigen::VectorXd lo,
                     Eigen::VectorXd period);

    int n() const { return n_; }
    int dim() const { return dim_; }
    Eigen::VectorXd value(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd gradient(const Eigen::VectorXd& x) const; ///< dim x n

    /// Flattened coefficients (cosine then sine, mode-major), for
    /// coordinate-wise search over fields.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd& p);

private:
    int n_;
    int dim_;
    Eigen::VectorXd lo_;
    std::vector<Eigen::VectorXd> wave_vectors_;
    std::vector<Eigen::VectorXd> cos_coeffs_;
    std::vector<Eigen::VectorXd> sin_coeffs_;
};

struct BandLimitedSpec {
    std::uint64_t seed = 1;
    int band = 2;
    double amplitude = 1.0;
};

struct PiecewiseKernelSpec {
    std::vector<KernelPiece> pieces;
};

struct PolynomialSpec {
    PolynomialField p;
};

struct FieldKind;

struct MollifiedSpec {
    std::shared_ptr<const FieldKind> inner;
    double eps = 0.0;
};

struct SumSpec {
    std::vector<std::shared_ptr<const FieldKind>> terms;
};

struct FieldKind {
    std::variant<BandLimitedSpec, PiecewiseKernelSpec, PolynomialSpec, MollifiedSpec, SumSpec> value;
};

struct FieldSpec {
    FieldKind kind;
    GridGeometry domain;
};

struct RealizedField {
    GridField u;
    MeasureField mu;
};

/// Samples u and assembles A u = AC density + interface pieces. Throws
/// SpecError when a piecewise field has a piece outside the null-space or
/// its regions do not partition the box.
RealizedField realize(const FieldSpec& spec, const Operator& op);

/// Pointwise evaluator for every kind except mollified (nullopt there).
std::optional<VectorFunction> pointwise(const FieldKind& kind, const Operator& op, const GridGeometry& domain);

/// Interfaces between the pieces of a piecewise kernel field inside the box.
std::vector<SingularPiece> interface_pieces(const PiecewiseKernelSpec& spec, const Operator& op,
                                            const GridGeometry& domain);

/// Regions cut out of the box by an arrangement of hyperplanes (one region
/// per sign pattern), each filled with a random null-space element.
PiecewiseKernelSpec random_piecewise_kernel(const Operator& op, const std::vector<HalfSpace>& cuts, std::uint64_t seed,
                                            double amplitude = 1.0, int degree_cap = 8);

/// Standard bump exp(-1 / (1 - s^2)) for s < 1, zero otherwise.
double bump(double s);

/// Convolution with the radially symmetric bump of radius eps, discrete
/// weights normalized to sum 1. Periodic grids wrap; on box grids the
/// stencil is truncated and renormalized near the faces. Throws
/// ResolutionError when eps spans fewer than 2 cells.
GridField mollify(const GridField& u, double eps);

/// Value at `point` of the mollified field, without mollifying the grid.
Eigen::VectorXd mollify_at(const GridField& u, std::size_t point, double eps);

nlohmann::json to_json(const FieldKind& kind);
FieldKind field_kind_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridGeometry& g);
GridGeometry geometry_from_json(const nlohmann::json& j);

} // namespace bvlab
