#include "bvlab/nullspace.hpp"

#include <sstream>

#include "bvlab/errors.hpp"

namespace bvlab {

Eigen::MatrixXd homogeneous_coefficient_map(const Operator& op, int d)
{
    if (d < 0) {
        throw InputError("degree must be nonnegative");
    }
    const int n = op.n();
    const auto cols_order = monomials_of_degree(n, d);
    const auto m_in = static_cast<Eigen::Index>(cols_order.size());
    if (d == 0) {
        return Eigen::MatrixXd::Zero(0, op.dim_v() * m_in);
    }
    const auto rows_order = monomials_of_degree(n, d - 1);
    const auto m_out = static_cast<Eigen::Index>(rows_order.size());
    Eigen::MatrixXd map(op.dim_w() * m_out, op.dim_v() * m_in);
    for (int comp = 0; comp < op.dim_v(); ++comp) {
        for (Eigen::Index k = 0; k < m_in; ++k) {
            const auto p = PolynomialField::monomial(n, op.dim_v(), comp, cols_order[static_cast<std::size_t>(k)]);
            map.col(comp * m_in + k) = apply_to_polynomial(op, p).coefficient_vector(rows_order);
        }
    }
    return map;
}

std::vector<PolynomialField> homogeneous_kernel_basis(const Operator& op, int d, double rank_tol)
{
    const Eigen::MatrixXd map = homogeneous_coefficient_map(op, d);
    const auto order = monomials_of_degree(op.n(), d);
    const auto unknowns = map.cols();

    Eigen::MatrixXd null_vectors;
    if (map.rows() == 0 || map.cwiseAbs().maxCoeff() == 0.0) {
        null_vectors = Eigen::MatrixXd::Identity(unknowns, unknowns);
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        const double cutoff = rank_tol * s(0);
        Eigen::Index rank = 0;
        while (rank < s.size() && s(rank) > cutoff) {
            ++rank;
        }
        null_vectors = svd.matrixV().rightCols(unknowns - rank);
    }

    std::vector<PolynomialField> basis;
    for (Eigen::Index k = 0; k < null_vectors.cols(); ++k) {
        Eigen::VectorXd c = null_vectors.col(k);
        // Clean round-off so exact kernels keep sparse coefficient tables.
        c = c.unaryExpr([](double x) { return std::abs(x) < 1e-15 ? 0.0 : x; });
        c.normalize();
        basis.push_back(PolynomialField::from_coefficient_vector(op.n(), op.dim_v(), order, c));
    }
    return basis;
}

std::string NullspaceReport::verdict() const
{
    std::ostringstream os;
    if (fdn) {
        os << "FDN(l=" << *stabilization_degree << ", totalDim=" << total_dim << ")";
    } else {
        os << "NotFdnUpTo(" << degree_cap << ")";
    }
    return os.str();
}

nlohmann::json NullspaceReport::to_json() const
{
    nlohmann::json j;
    j["dimsPerDegree"] = dims_per_degree;
    j["degreeCap"] = degree_cap;
    j["verdict"] = verdict();
    j["fdn"] = fdn;
    if (stabilization_degree) {
        j["stabilizationDegree"] = *stabilization_degree;
        j["totalDim"] = total_dim;
    } else {
        j["stabilizationDegree"] = nullptr;
    }
    j["heuristic"] = heuristic;
    j["crossCheck"] = {{"complexMargin", complex_margin},
                       {"complexElliptic", complex_elliptic},
                       {"agrees", cross_check_agrees}};
    return j;
}

NullspaceReport fdn_report(const Operator& op, int degree_cap, const SphereSearchConfig& cfg)
{
    if (degree_cap < 2) {
        throw InputError("degree cap must be at least 2");
    }
    NullspaceReport rep;
    rep.degree_cap = degree_cap;
    for (int d = 0; d <= degree_cap; ++d) {
        rep.dims_per_degree.push_back(static_cast<int>(homogeneous_kernel_basis(op, d).size()));
    }
    int last_nonzero = -1;
    for (int d = 0; d <= degree_cap; ++d) {
        if (rep.dims_per_degree[static_cast<std::size_t>(d)] > 0) {
            last_nonzero = d;
        }
    }
    constexpr int guard_band = 2;
    if (degree_cap - last_nonzero >= guard_band) {
        rep.fdn = true;
        rep.stabilization_degree = std::max(last_nonzero, 0);
        for (int d = 0; d <= last_nonzero; ++d) {
            rep.total_dim += rep.dims_per_degree[static_cast<std::size_t>(d)];
        }
    }
    const auto ell = complex_ellipticity_margin(op, cfg);
    rep.complex_margin = ell.complex_margin;
    rep.complex_elliptic = ell.complex_elliptic();
    rep.cross_check_agrees = rep.fdn == rep.complex_elliptic;
    return rep;
}

std::vector<PolynomialField> kernel_basis(const Operator& op, const NullspaceReport& report)
{
    if (!report.fdn) {
        throw PreconditionError("operator '" + op.name() + "' has no finite-dimensional null-space up to degree "
                                + std::to_string(report.degree_cap) + " (" + report.verdict() + ")");
    }
    std::vector<PolynomialField> basis;
    for (int d = 0; d <= *report.stabilization_degree; ++d) {
        auto part = homogeneous_kernel_basis(op, d);
        basis.insert(basis.end(), part.begin(), part.end());
    }
    return basis;
}

std::vector<PolynomialField> kernel_basis(const Operator& op, int degree_cap)
{
    return kernel_basis(op, fdn_report(op, degree_cap));
}

} // namespace bvlab
