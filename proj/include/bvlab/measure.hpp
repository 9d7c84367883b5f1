#pragma once

/*
 * Discrete W-valued Radon measure A u = (AC density) L^n + singular part.
 *
 * The absolutely continuous part is a grid density. The singular part is a
 * finite union of flat interface pieces (segments for n = 2, convex planar
 * polygons for n = 3), each carrying a polynomial surface density.
 */

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bvlab/ballcalc.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/polynomial.hpp"

namespace bvlab {

struct SingularPiece {
    /// Two endpoints (n = 2) or the vertices of a convex polygon in order (n = 3).
    std::vector<Eigen::VectorXd> vertices;
    /// Unit normal pointing from the "minus" to the "plus" side.
    Eigen::VectorXd normal;
    /// W-valued surface density sum_j nu_j A_j [u], [u] = u_plus - u_minus.
    PolynomialField density;

    /// Hausdorff measure of the piece.
    double measure() const;
};

struct PieceVariation {
    double value = 0.0;
    bool touches_boundary = false; ///< the piece meets the bounding sphere
};

/// int_{piece cap closed ball} |density - 0| dH^{n-1}; the segment case is
/// clipped exactly and integrated by composite Gauss-Legendre, polygons by
/// clipping to the disc cut out by the plane and a fine triangle subdivision.
PieceVariation piece_variation(const SingularPiece& piece, const Ball& ball);

/// Signed integral of phi . density over the whole piece (distributional
/// pairing); phi maps points to W-vectors.
double piece_pairing(const SingularPiece& piece, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& phi);

/// Quadrature nodes (position, weight) covering the piece with spacing about h.
std::vector<std::pair<Eigen::VectorXd, double>> piece_nodes(const SingularPiece& piece, double h);

struct Variation {
    double absolutely_continuous = 0.0;
    double singular = 0.0;
    bool touches_boundary = false;
    double total() const { return absolutely_continuous + singular; }
};

class MeasureField {
public:
    MeasureField(GridField ac_density, std::vector<SingularPiece> singular = {});

    const GridField& ac_density() const { return ac_; }
    const std::vector<SingularPiece>& singular_pieces() const { return singular_; }
    int dim() const { return ac_.dim(); }

    /// |mu - offset L^n|(closed ball): AC part by cell quadrature on `cells`
    /// (built from the density grid), singular part exactly.
    Variation total_variation(const BallCells& cells, const Eigen::VectorXd* ac_offset = nullptr) const;
    Variation total_variation(const Ball& ball, double min_cells_per_diameter = 8.0) const;

    /// Smallest distance from x to any singular piece (infinity when none).
    double distance_to_singular(const Eigen::VectorXd& x) const;

    MeasureField& operator+=(const MeasureField& other);

private:
    GridField ac_;
    std::vector<SingularPiece> singular_;
};

/// Distance from x to a piece.
double distance_to_piece(const SingularPiece& piece, const Eigen::VectorXd& x);

} // namespace bvlab
