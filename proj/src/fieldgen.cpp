#include "bvlab/fieldgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bvlab/errors.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/random.hpp"

namespace bvlab {

namespace {

double box_diameter(const GridGeometry& g) { return (g.hi() - g.lo()).norm(); }

std::vector<HalfSpace> box_constraints(const GridGeometry& g)
{
    std::vector<HalfSpace> out;
    for (int i = 0; i < g.n(); ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(g.n(), i);
        out.push_back({e, g.hi()(i)});
        out.push_back({-e, -g.lo()(i)});
    }
    return out;
}

bool in_box(const GridGeometry& g, const Eigen::VectorXd& x)
{
    return (x.array() >= g.lo().array()).all() && (x.array() <= g.hi().array()).all();
}

// A[nu] applied to the jump p_plus - p_minus.
PolynomialField jump_density(const Operator& op, const Eigen::VectorXd& nu, const PolynomialField& minus,
                             const PolynomialField& plus)
{
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(op.dim_w(), op.dim_v());
    for (int j = 0; j < op.n(); ++j) {
        s += nu(j) * op.coefficient(j);
    }
    return (plus - minus).transformed(s);
}

int find_neighbor(const PiecewiseKernelSpec& spec, std::size_t self, const Eigen::VectorXd& probe)
{
    for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
        if (j != self && spec.pieces[j].region.contains(probe)) {
            return static_cast<int>(j);
        }
    }
    return -1;
}

/*
 * Planar case. The facet line {a.x = b} is parametrized as p0 + t d, clipped
 * to the box and to the other constraints of its own region, then split at
 * every crossing with a hyperplane of another region so that each sub-segment
 * has a single neighbour.
 */
void planar_facets(const PiecewiseKernelSpec& spec, const Operator& op, const GridGeometry& g, std::size_t i,
                   std::vector<SingularPiece>& out)
{
    const double diam = box_diameter(g);
    const auto& own = spec.pieces[i].region.constraints;
    auto limits = box_constraints(g);
    for (std::size_t k = 0; k < own.size(); ++k) {
        const Eigen::VectorXd& a = own[k].normal;
        const double an = a.norm();
        const Eigen::VectorXd nu = a / an;
        const Eigen::VectorXd p0 = nu * (own[k].offset / an);
        const Eigen::VectorXd d = Eigen::Vector2d(-nu(1), nu(0));

        double t0 = -4.0 * diam - std::abs(p0.norm());
        double t1 = -t0;
        bool empty = false;
        auto clip = [&](const HalfSpace& c) {
            const double cd = c.normal.dot(d);
            const double rhs = c.offset - c.normal.dot(p0);
            if (std::abs(cd) <= 1e-14 * c.normal.norm()) {
                if (rhs < -1e-12 * c.normal.norm() * diam) {
                    empty = true;
                }
                return;
            }
            if (cd > 0.0) {
                t1 = std::min(t1, rhs / cd);
            } else {
                t0 = std::max(t0, rhs / cd);
            }
        };
        for (const auto& c : limits) {
            clip(c);
        }
        for (std::size_t m = 0; m < own.size(); ++m) {
            if (m != k) {
                clip(own[m]);
            }
        }
        if (empty || t1 - t0 <= 1e-12 * diam) {
            continue;
        }
        std::vector<double> cuts{t0, t1};
        for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
            if (j == i) {
                continue;
            }
            for (const auto& c : spec.pieces[j].region.constraints) {
                const double cd = c.normal.dot(d);
                if (std::abs(cd) <= 1e-14 * c.normal.norm()) {
                    continue;
                }
                const double t = (c.offset - c.normal.dot(p0)) / cd;
                if (t > t0 && t < t1) {
                    cuts.push_back(t);
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());
        const double delta = 1e-7 * diam;
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            if (cuts[s + 1] - cuts[s] <= 1e-12 * diam) {
                continue;
            }
            const Eigen::VectorXd mid = p0 + 0.5 * (cuts[s] + cuts[s + 1]) * d;
            const Eigen::VectorXd probe = mid + delta * nu;
            if (!in_box(g, probe)) {
                continue;
            }
            const int j = find_neighbor(spec, i, probe);
            if (j <= static_cast<int>(i)) {
                continue; // box face, or counted from the other side
            }
            out.push_back({{p0 + cuts[s] * d, p0 + cuts[s + 1] * d},
                           nu,
                           jump_density(op, nu, spec.pieces[i].field, spec.pieces[static_cast<std::size_t>(j)].field)});
        }
    }
}

using Polygon = std::vector<Eigen::VectorXd>;

// Sutherland-Hodgman step: the part of a convex polygon with c.x <= e.
Polygon clip_polygon(const Polygon& poly, const HalfSpace& c)
{
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t k = 0; k < m; ++k) {
        const Eigen::VectorXd& p = poly[k];
        const Eigen::VectorXd& q = poly[(k + 1) % m];
        const double fp = c.normal.dot(p) - c.offset;
        const double fq = c.normal.dot(q) - c.offset;
        if (fp <= 0.0) {
            out.push_back(p);
        }
        if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
            out.push_back(p + (fp / (fp - fq)) * (q - p));
        }
    }
    return out;
}

double polygon_area(const Polygon& poly)
{
    double area = 0.0;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        const Eigen::Vector3d e1 = poly[k] - poly[0];
        const Eigen::Vector3d e2 = poly[k + 1] - poly[0];
        area += 0.5 * e1.cross(e2).norm();
    }
    return area;
}

void spatial_facets(const PiecewiseKernelSpec& spec, const Operator& op, const GridGeometry& g, std::size_t i,
                    std::vector<SingularPiece>& out)
{
    const double diam = box_diameter(g);
    const double tiny_area = 1e-14 * diam * diam;
    const auto& own = spec.pieces[i].region.constraints;
    const Eigen::Vector3d center = 0.5 * (g.lo() + g.hi());
    for (std::size_t k = 0; k < own.size(); ++k) {
        const Eigen::Vector3d a = own[k].normal;
        const double an = a.norm();
        const Eigen::Vector3d nu = a / an;
        const Eigen::Vector3d p0 = center - (nu.dot(center) - own[k].offset / an) * nu;
        Eigen::Vector3d u1 = nu.unitOrthogonal();
        Eigen::Vector3d u2 = nu.cross(u1);
        const double big = 4.0 * diam;
        Polygon poly{p0 - big * u1 - big * u2, p0 + big * u1 - big * u2, p0 + big * u1 + big * u2,
                     p0 - big * u1 + big * u2};
        for (const auto& c : box_constraints(g)) {
            poly = clip_polygon(poly, c);
        }
        for (std::size_t m = 0; m < own.size() && poly.size() >= 3; ++m) {
            if (m != k) {
                poly = clip_polygon(poly, own[m]);
            }
        }
        if (poly.size() < 3 || polygon_area(poly) <= tiny_area) {
            continue;
        }
        std::vector<Polygon> parts{poly};
        for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
            if (j == i) {
                continue;
            }
            for (const auto& c : spec.pieces[j].region.constraints) {
                std::vector<Polygon> next;
                for (const auto& part : parts) {
                    double lo = 0.0;
                    double hi = 0.0;
                    for (const auto& v : part) {
                        const double f = (c.normal.dot(v) - c.offset) / c.normal.norm();
                        lo = std::min(lo, f);
                        hi = std::max(hi, f);
                    }
                    const double tol = 1e-12 * diam;
                    if (lo < -tol && hi > tol) {
                        for (const auto& side : {c, HalfSpace{-c.normal, -c.offset}}) {
                            auto piece = clip_polygon(part, side);
                            if (piece.size() >= 3 && polygon_area(piece) > tiny_area) {
                                next.push_back(std::move(piece));
                            }
                        }
                    } else {
                        next.push_back(part);
                    }
                }
                parts = std::move(next);
            }
        }
        const double delta = 1e-7 * diam;
        for (auto& part : parts) {
            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(3);
            for (const auto& v : part) {
                centroid += v;
            }
            centroid /= static_cast<double>(part.size());
            const Eigen::VectorXd probe = centroid + delta * Eigen::VectorXd(nu);
            if (!in_box(g, probe)) {
                continue;
            }
            const int j = find_neighbor(spec, i, probe);
            if (j <= static_cast<int>(i)) {
                continue;
            }
            out.push_back({std::move(part), Eigen::VectorXd(nu),
                           jump_density(op, nu, spec.pieces[i].field, spec.pieces[static_cast<std::size_t>(j)].field)});
        }
    }
}

void check_piecewise(const PiecewiseKernelSpec& spec, const Operator& op, const GridGeometry& g)
{
    if (spec.pieces.empty()) {
        throw SpecError("a piecewise kernel field needs at least one piece");
    }
    if (g.periodic()) {
        throw SpecError("piecewise kernel fields live on box grids, not on the torus");
    }
    for (const auto& piece : spec.pieces) {
        if (piece.field.n() != op.n() || piece.field.value_dim() != op.dim_v()) {
            throw SpecError("piece field does not match the operator shape");
        }
        for (const auto& c : piece.region.constraints) {
            if (c.normal.size() != op.n() || c.normal.norm() == 0.0) {
                throw SpecError("region constraint needs a nonzero normal of length n");
            }
        }
        const double residual = apply_to_polynomial(op, piece.field).coefficient_max();
        if (residual > 1e-9 * std::max(1.0, piece.field.coefficient_max())) {
            throw SpecError("piece field is not in the null-space of the operator (residual " +
                            std::to_string(residual) + ")");
        }
    }
    const double diam = box_diameter(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const Eigen::VectorXd x = g.position(p);
        int covering = 0;
        int interior = 0;
        for (const auto& piece : spec.pieces) {
            covering += piece.region.contains(x, 1e-12 * diam) ? 1 : 0;
            interior += piece.region.contains(x, -1e-9 * diam) ? 1 : 0;
        }
        if (covering == 0) {
            throw SpecError("regions do not cover the box");
        }
        if (interior > 1) {
            throw SpecError("regions overlap");
        }
    }
}

// Evaluates the first region containing x.
Eigen::VectorXd piecewise_value(const PiecewiseKernelSpec& spec, const Eigen::VectorXd& x, double slack)
{
    for (const auto& piece : spec.pieces) {
        if (piece.region.contains(x, slack)) {
            return piece.field(x);
        }
    }
    throw SpecError("point not covered by any region");
}

// Integer offsets of the discrete bump stencil with their raw weights.
struct Stencil {
    std::vector<std::vector<int>> offsets;
    std::vector<double> weights;
};

Stencil bump_stencil(const GridGeometry& g, double eps)
{
    if (!(eps > 0.0) || eps / g.max_spacing() < 2.0) {
        throw ResolutionError("mollifier radius must span at least 2 cells");
    }
    const int n = g.n();
    std::vector<int> reach(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        reach[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(eps / g.spacing(i)));
    }
    Stencil st;
    std::vector<int> o(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        o[static_cast<std::size_t>(i)] = -reach[static_cast<std::size_t>(i)];
    }
    while (true) {
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            r2 += std::pow(o[static_cast<std::size_t>(i)] * g.spacing(i), 2);
        }
        const double w = bump(std::sqrt(r2) / eps);
        if (w > 0.0) {
            st.offsets.push_back(o);
            st.weights.push_back(w);
        }
        int axis = n - 1;
        while (axis >= 0) {
            auto& c = o[static_cast<std::size_t>(axis)];
            if (c < reach[static_cast<std::size_t>(axis)]) {
                ++c;
                break;
            }
            c = -reach[static_cast<std::size_t>(axis)];
            --axis;
        }
        if (axis < 0) {
            break;
        }
    }
    return st;
}

// Flat index of idx + offset; wraps on periodic grids, size() when outside.
std::size_t offset_index(const GridGeometry& g, const std::vector<int>& idx, const std::vector<int>& offset)
{
    std::vector<int> k(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        int v = idx[i] + offset[i];
        const int s = g.shape()[i];
        if (g.periodic()) {
            v = ((v % s) + s) % s;
        } else if (v < 0 || v >= s) {
            return g.size();
        }
        k[i] = v;
    }
    return g.flat_index(k);
}

Eigen::VectorXd stencil_value(const GridField& u, const Stencil& st, std::size_t point)
{
    const auto& g = u.geometry();
    const auto idx = g.multi_index(point);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(u.dim());
    double total = 0.0;
    for (std::size_t s = 0; s < st.offsets.size(); ++s) {
        const std::size_t q = offset_index(g, idx, st.offsets[s]);
        if (q == g.size()) {
            continue;
        }
        acc += st.weights[s] * u.value(q);
        total += st.weights[s];
    }
    return acc / total;
}

// int_{R^n} bump(|z|) dz, by the radial integral (the integrand is flat at 1).
double bump_mass(int n)
{
    const int steps = 4000;
    double radial = 0.0;
    for (int k = 1; k < steps; ++k) {
        const double s = static_cast<double>(k) / steps;
        radial += bump(s) * std::pow(s, n - 1);
    }
    radial /= steps;
    const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
    return sphere * radial;
}

// Adds the interface measure convolved with the continuous bump of radius eps.
void splat_singular(const std::vector<SingularPiece>& pieces, double eps, GridField& ac)
{
    const auto& g = ac.geometry();
    const int n = g.n();
    const double norm = 1.0 / (bump_mass(n) * std::pow(eps, n));
    for (const auto& piece : pieces) {
        for (const auto& [y, w] : piece_nodes(piece, 0.25 * g.min_spacing())) {
            const Eigen::VectorXd d = piece.density(y);
            // all grid points within eps of y
            std::vector<int> lo_idx(static_cast<std::size_t>(n));
            std::vector<int> hi_idx(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                lo_idx[static_cast<std::size_t>(i)] =
                    static_cast<int>(std::ceil((y(i) - eps - g.lo()(i)) / g.spacing(i) - 0.5));
                hi_idx[static_cast<std::size_t>(i)] =
                    static_cast<int>(std::floor((y(i) + eps - g.lo()(i)) / g.spacing(i) - 0.5));
            }
            std::vector<int> k = lo_idx;
            while (true) {
                std::vector<int> wrapped = k;
                bool inside = true;
                Eigen::VectorXd x(n);
                for (int i = 0; i < n; ++i) {
                    const auto ii = static_cast<std::size_t>(i);
                    x(i) = g.lo()(i) + (k[ii] + 0.5) * g.spacing(i);
                    const int s = g.shape()[ii];
                    if (g.periodic()) {
                        wrapped[ii] = ((k[ii] % s) + s) % s;
                    } else if (k[ii] < 0 || k[ii] >= s) {
                        inside = false;
                    }
                }
                if (inside) {
                    const double weight = bump((x - y).norm() / eps);
                    if (weight > 0.0) {
                        ac.value(g.flat_index(wrapped)) += (w * weight * norm) * d;
                    }
                }
                int axis = n - 1;
                while (axis >= 0) {
                    auto& c = k[static_cast<std::size_t>(axis)];
                    if (c < hi_idx[static_cast<std::size_t>(axis)]) {
                        ++c;
                        break;
                    }
                    c = lo_idx[static_cast<std::size_t>(axis)];
                    --axis;
                }
                if (axis < 0) {
                    break;
                }
            }
        }
    }
}

RealizedField realize_kind(const FieldKind& kind, const Operator& op, const GridGeometry& g)
{
    if (g.n() != op.n()) {
        throw SpecError("field domain dimension does not match the operator");
    }
    const int dv = op.dim_v();
    const int dw = op.dim_w();
    return std::visit(
        [&](const auto& s) -> RealizedField {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BandLimitedSpec>) {
                if (s.band < 1) {
                    throw SpecError("band must be at least 1");
                }
                const BandLimitedField f(g.n(), dv, s.band, s.amplitude, s.seed, g.lo(), g.hi() - g.lo());
                GridField u = GridField::sample(g, dv, [&](const Eigen::VectorXd& x) { return f.value(x); });
                GridField ac = GridField::sample(
                    g, dw, [&](const Eigen::VectorXd& x) { return op.apply_to_gradient(f.gradient(x)); });
                return {std::move(u), MeasureField(std::move(ac))};
            } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
                if (s.p.n() != op.n() || s.p.value_dim() != dv) {
                    throw SpecError("polynomial field does not match the operator shape");
                }
                const PolynomialField ap = apply_to_polynomial(op, s.p);
                GridField u = GridField::sample(g, dv, [&](const Eigen::VectorXd& x) { return s.p(x); });
                GridField ac = GridField::sample(g, dw, [&](const Eigen::VectorXd& x) { return ap(x); });
                return {std::move(u), MeasureField(std::move(ac))};
            } else if constexpr (std::is_same_v<T, PiecewiseKernelSpec>) {
                check_piecewise(s, op, g);
                const double slack = 1e-12 * box_diameter(g);
                GridField u =
                    GridField::sample(g, dv, [&](const Eigen::VectorXd& x) { return piecewise_value(s, x, slack); });
                return {std::move(u), MeasureField(GridField(g, dw), interface_pieces(s, op, g))};
            } else if constexpr (std::is_same_v<T, MollifiedSpec>) {
                if (!s.inner) {
                    throw SpecError("mollified field without an inner field");
                }
                const RealizedField inner = realize_kind(*s.inner, op, g);
                GridField ac = mollify(inner.mu.ac_density(), s.eps);
                splat_singular(inner.mu.singular_pieces(), s.eps, ac);
                return {mollify(inner.u, s.eps), MeasureField(std::move(ac))};
            } else {
                if (s.terms.empty()) {
                    throw SpecError("sum of no fields");
                }
                RealizedField total{GridField(g, dv), MeasureField(GridField(g, dw))};
                for (const auto& term : s.terms) {
                    if (!term) {
                        throw SpecError("empty summand");
                    }
                    const RealizedField r = realize_kind(*term, op, g);
                    total.u += r.u;
                    total.mu += r.mu;
                }
                return total;
            }
        },
        kind.value);
}

Eigen::VectorXd json_vector(const nlohmann::json& j, int n, const char* what)
{
    Eigen::VectorXd v(n);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    const auto values = j.get<std::vector<double>>();
    if (static_cast<int>(values.size()) != n) {
        throw ConfigError(std::string(what) + " must have " + std::to_string(n) + " entries");
    }
    for (int i = 0; i < n; ++i) {
        v(i) = values[static_cast<std::size_t>(i)];
    }
    return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

FieldKind kind_from_json(const nlohmann::json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "band_limited") {
        BandLimitedSpec s;
        s.seed = j.value("seed", s.seed);
        s.band = j.value("band", s.band);
        s.amplitude = j.value("amplitude", s.amplitude);
        return {s};
    }
    if (kind == "polynomial") {
        return {PolynomialSpec{PolynomialField::from_json(j.at("p"))}};
    }
    if (kind == "piecewise_kernel") {
        PiecewiseKernelSpec s;
        for (const auto& jp : j.at("pieces")) {
            KernelPiece piece{Region{}, PolynomialField::from_json(jp.at("field"))};
            for (const auto& jc : jp.at("region")) {
                const auto normal = jc.at("normal").get<std::vector<double>>();
                piece.region.constraints.push_back(
                    {Eigen::Map<const Eigen::VectorXd>(normal.data(), static_cast<Eigen::Index>(normal.size())),
                     jc.at("offset").get<double>()});
            }
            s.pieces.push_back(std::move(piece));
        }
        return {s};
    }
    if (kind == "mollified") {
        return {MollifiedSpec{std::make_shared<FieldKind>(kind_from_json(j.at("inner"))), j.at("eps").get<double>()}};
    }
    if (kind == "sum") {
        SumSpec s;
        for (const auto& jt : j.at("terms")) {
            s.terms.push_back(std::make_shared<FieldKind>(kind_from_json(jt)));
        }
        return {s};
    }
    throw ConfigError("unknown field kind '" + kind + "'");
}

} // namespace

bool Region::contains(const Eigen::VectorXd& x, double slack) const
{
    return std::all_of(constraints.begin(), constraints.end(),
                       [&](const HalfSpace& c) { return c.signed_distance(x) <= slack; });
}

BandLimitedField::BandLimitedField(int n, int dim, int band, double amplitude, std::uint64_t seed, Eigen::VectorXd lo,
                                   Eigen::VectorXd period)
    : n_(n), dim_(dim), lo_(std::move(lo))
{
    if (n < 1 || dim < 1 || band < 1 || lo_.size() != n || period.size() != n || (period.array() <= 0.0).any()) {
        throw InputError("invalid band-limited field parameters");
    }
    // One representative of every pair +-k with 0 < |k|_inf <= band.
    std::vector<int> k(static_cast<std::size_t>(n), -band);
    while (true) {
        const auto first = std::find_if(k.begin(), k.end(), [](int c) { return c != 0; });
        if (first != k.end() && *first > 0) {
            Eigen::VectorXd w(n);
            for (int i = 0; i < n; ++i) {
                w(i) = 2.0 * std::numbers::pi * k[static_cast<std::size_t>(i)] / period(i);
            }
            wave_vectors_.push_back(w);
        }
        int axis = n - 1;
        while (axis >= 0) {
            auto& c = k[static_cast<std::size_t>(axis)];
            if (c < band) {
                ++c;
                break;
            }
            c = -band;
            --axis;
        }
        if (axis < 0) {
            break;
        }
    }
    Rng rng = make_rng(seed, "band_limited", static_cast<std::uint64_t>(band));
    const double scale = amplitude / std::sqrt(static_cast<double>(wave_vectors_.size()));
    for (std::size_t m = 0; m < wave_vectors_.size(); ++m) {
        Eigen::VectorXd a(dim);
        Eigen::VectorXd b(dim);
        for (int c = 0; c < dim; ++c) {
            a(c) = scale * standard_normal(rng);
            b(c) = scale * standard_normal(rng);
        }
        cos_coeffs_.push_back(a);
        sin_coeffs_.push_back(b);
    }
}

Eigen::VectorXd BandLimitedField::value(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    const Eigen::VectorXd y = x - lo_;
    for (std::size_t m = 0; m < wave_vectors_.size(); ++m) {
        const double phase = wave_vectors_[m].dot(y);
        v += std::cos(phase) * cos_coeffs_[m] + std::sin(phase) * sin_coeffs_[m];
    }
    return v;
}

Eigen::MatrixXd BandLimitedField::gradient(const Eigen::VectorXd& x) const
{
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim_, n_);
    const Eigen::VectorXd y = x - lo_;
    for (std::size_t m = 0; m < wave_vectors_.size(); ++m) {
        const double phase = wave_vectors_[m].dot(y);
        const Eigen::VectorXd d = -std::sin(phase) * cos_coeffs_[m] + std::cos(phase) * sin_coeffs_[m];
        g += d * wave_vectors_[m].transpose();
    }
    return g;
}

Eigen::VectorXd BandLimitedField::parameters() const
{
    Eigen::VectorXd p(static_cast<Eigen::Index>(2 * wave_vectors_.size()) * dim_);
    for (std::size_t m = 0; m < wave_vectors_.size(); ++m) {
        const auto base = static_cast<Eigen::Index>(2 * m) * dim_;
        p.segment(base, dim_) = cos_coeffs_[m];
        p.segment(base + dim_, dim_) = sin_coeffs_[m];
    }
    return p;
}

void BandLimitedField::set_parameters(const Eigen::VectorXd& p)
{
    if (p.size() != static_cast<Eigen::Index>(2 * wave_vectors_.size()) * dim_) {
        throw InputError("parameter vector has the wrong length");
    }
    for (std::size_t m = 0; m < wave_vectors_.size(); ++m) {
        const auto base = static_cast<Eigen::Index>(2 * m) * dim_;
        cos_coeffs_[m] = p.segment(base, dim_);
        sin_coeffs_[m] = p.segment(base + dim_, dim_);
    }
}

RealizedField realize(const FieldSpec& spec, const Operator& op) { return realize_kind(spec.kind, op, spec.domain); }

std::optional<VectorFunction> pointwise(const FieldKind& kind, const Operator& op, const GridGeometry& domain)
{
    return std::visit(
        [&](const auto& s) -> std::optional<VectorFunction> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BandLimitedSpec>) {
                auto f = std::make_shared<BandLimitedField>(domain.n(), op.dim_v(), s.band, s.amplitude, s.seed,
                                                            domain.lo(), domain.hi() - domain.lo());
                return VectorFunction([f](const Eigen::VectorXd& x) { return f->value(x); });
            } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
                return VectorFunction([p = s.p](const Eigen::VectorXd& x) { return p(x); });
            } else if constexpr (std::is_same_v<T, PiecewiseKernelSpec>) {
                const double slack = 1e-12 * box_diameter(domain);
                return VectorFunction([s, slack](const Eigen::VectorXd& x) { return piecewise_value(s, x, slack); });
            } else if constexpr (std::is_same_v<T, MollifiedSpec>) {
                return std::nullopt;
            } else {
                std::vector<VectorFunction> parts;
                for (const auto& term : s.terms) {
                    auto f = pointwise(*term, op, domain);
                    if (!f) {
                        return std::nullopt;
                    }
                    parts.push_back(std::move(*f));
                }
                const int dim = op.dim_v();
                return VectorFunction([parts, dim](const Eigen::VectorXd& x) {
                    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
                    for (const auto& f : parts) {
                        v += f(x);
                    }
                    return v;
                });
            }
        },
        kind.value);
}

std::vector<SingularPiece> interface_pieces(const PiecewiseKernelSpec& spec, const Operator& op,
                                            const GridGeometry& domain)
{
    std::vector<SingularPiece> out;
    for (std::size_t i = 0; i < spec.pieces.size(); ++i) {
        if (domain.n() == 2) {
            planar_facets(spec, op, domain, i, out);
        } else if (domain.n() == 3) {
            spatial_facets(spec, op, domain, i, out);
        } else {
            throw InputError("interfaces are supported for n = 2 and n = 3");
        }
    }
    return out;
}

PiecewiseKernelSpec random_piecewise_kernel(const Operator& op, const std::vector<HalfSpace>& cuts, std::uint64_t seed,
                                            double amplitude, int degree_cap)
{
    if (cuts.empty() || cuts.size() > 12) {
        throw InputError("between 1 and 12 cutting hyperplanes are supported");
    }
    const auto basis = kernel_basis(op, degree_cap);
    PiecewiseKernelSpec spec;
    const std::size_t patterns = std::size_t{1} << cuts.size();
    for (std::size_t s = 0; s < patterns; ++s) {
        KernelPiece piece{Region{}, PolynomialField(op.n(), op.dim_v())};
        for (std::size_t c = 0; c < cuts.size(); ++c) {
            if ((s >> c) & 1U) {
                piece.region.constraints.push_back({-cuts[c].normal, -cuts[c].offset});
            } else {
                piece.region.constraints.push_back(cuts[c]);
            }
        }
        Rng rng = make_rng(seed, "piecewise_kernel", s);
        for (const auto& e : basis) {
            piece.field += (amplitude * standard_normal(rng)) * e;
        }
        spec.pieces.push_back(std::move(piece));
    }
    return spec;
}

double bump(double s)
{
    if (s >= 1.0) {
        return 0.0;
    }
    return std::exp(-1.0 / (1.0 - s * s));
}

GridField mollify(const GridField& u, double eps)
{
    const Stencil st = bump_stencil(u.geometry(), eps);
    GridField out(u.geometry(), u.dim());
    for (std::size_t p = 0; p < u.points(); ++p) {
        out.value(p) = stencil_value(u, st, p);
    }
    return out;
}

Eigen::VectorXd mollify_at(const GridField& u, std::size_t point, double eps)
{
    return stencil_value(u, bump_stencil(u.geometry(), eps), point);
}

nlohmann::json to_json(const FieldKind& kind)
{
    return std::visit(
        [](const auto& s) -> nlohmann::json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BandLimitedSpec>) {
                return {{"kind", "band_limited"}, {"seed", s.seed}, {"band", s.band}, {"amplitude", s.amplitude}};
            } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
                return {{"kind", "polynomial"}, {"p", s.p.to_json()}};
            } else if constexpr (std::is_same_v<T, PiecewiseKernelSpec>) {
                nlohmann::json pieces = nlohmann::json::array();
                for (const auto& piece : s.pieces) {
                    nlohmann::json region = nlohmann::json::array();
                    for (const auto& c : piece.region.constraints) {
                        region.push_back({{"normal", to_std(c.normal)}, {"offset", c.offset}});
                    }
                    pieces.push_back({{"region", region}, {"field", piece.field.to_json()}});
                }
                return {{"kind", "piecewise_kernel"}, {"pieces", pieces}};
            } else if constexpr (std::is_same_v<T, MollifiedSpec>) {
                return {{"kind", "mollified"}, {"eps", s.eps}, {"inner", to_json(*s.inner)}};
            } else {
                nlohmann::json terms = nlohmann::json::array();
                for (const auto& t : s.terms) {
                    terms.push_back(to_json(*t));
                }
                return {{"kind", "sum"}, {"terms", terms}};
            }
        },
        kind.value);
}

FieldKind field_kind_from_json(const nlohmann::json& j)
{
    try {
        return kind_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid field description: ") + e.what());
    }
}

nlohmann::json to_json(const GridGeometry& g)
{
    return {{"n", g.n()},
            {"cells", g.shape()},
            {"lo", to_std(g.lo())},
            {"hi", to_std(g.hi())},
            {"periodic", g.periodic()}};
}

GridGeometry geometry_from_json(const nlohmann::json& j)
{
    try {
        const int n = j.at("n").get<int>();
        if (n < 1) {
            throw ConfigError("domain dimension must be positive");
        }
        std::vector<int> cells;
        if (j.at("cells").is_number()) {
            cells.assign(static_cast<std::size_t>(n), j.at("cells").get<int>());
        } else {
            cells = j.at("cells").get<std::vector<int>>();
        }
        if (static_cast<int>(cells.size()) != n) {
            throw ConfigError("cells must have n entries");
        }
        return GridGeometry(cells, json_vector(j.value("lo", nlohmann::json(-1.0)), n, "lo"),
                            json_vector(j.value("hi", nlohmann::json(1.0)), n, "hi"), j.value("periodic", false));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid domain description: ") + e.what());
    }
}

} // namespace bvlab
