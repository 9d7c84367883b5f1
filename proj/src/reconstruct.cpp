#include "bvlab/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fftw3.h>

#include "bvlab/errors.hpp"
#include "bvlab/fieldgen.hpp"

namespace bvlab {

namespace {

// In-place n-dimensional complex DFT on one scalar component at a time.
class Fft {
public:
    explicit Fft(const std::vector<int>& shape)
    {
        size_ = 1;
        for (int s : shape) {
            size_ *= static_cast<std::size_t>(s);
        }
        buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_));
        if (buffer_ == nullptr) {
            throw std::bad_alloc();
        }
        const int rank = static_cast<int>(shape.size());
        forward_ = fftw_plan_dft(rank, shape.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft(rank, shape.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    ~Fft()
    {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buffer_);
    }

    std::size_t size() const { return size_; }

    /// Forward transform of component c of a real field.
    std::vector<std::complex<double>> forward(const GridField& u, int c)
    {
        for (std::size_t p = 0; p < size_; ++p) {
            buffer_[p][0] = u.at(p, c);
            buffer_[p][1] = 0.0;
        }
        fftw_execute(forward_);
        std::vector<std::complex<double>> out(size_);
        for (std::size_t p = 0; p < size_; ++p) {
            out[p] = {buffer_[p][0], buffer_[p][1]};
        }
        return out;
    }

    /// Normalized inverse transform.
    std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& spectrum)
    {
        for (std::size_t p = 0; p < size_; ++p) {
            buffer_[p][0] = spectrum[p].real();
            buffer_[p][1] = spectrum[p].imag();
        }
        fftw_execute(backward_);
        std::vector<std::complex<double>> out(size_);
        const double scale = 1.0 / static_cast<double>(size_);
        for (std::size_t p = 0; p < size_; ++p) {
            out[p] = {buffer_[p][0] * scale, buffer_[p][1] * scale};
        }
        return out;
    }

private:
    std::size_t size_ = 0;
    fftw_complex* buffer_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

void require_periodic(const GridGeometry& g)
{
    if (!g.periodic()) {
        throw InputError("Fourier methods need a periodic grid");
    }
}

using Spectra = std::vector<std::vector<std::complex<double>>>;

Spectra forward_all(Fft& fft, const GridField& u)
{
    Spectra s;
    for (int c = 0; c < u.dim(); ++c) {
        s.push_back(fft.forward(u, c));
    }
    return s;
}

// Inverse transforms every component; returns the real field and the
// imaginary residue relative to the real part.
Reconstruction backward_all(Fft& fft, const Spectra& s, const GridGeometry& g)
{
    Reconstruction out{GridField(g, static_cast<int>(s.size())), 0.0};
    double max_re = 0.0;
    double max_im = 0.0;
    for (std::size_t c = 0; c < s.size(); ++c) {
        const auto values = fft.backward(s[c]);
        for (std::size_t p = 0; p < values.size(); ++p) {
            out.u.at(p, static_cast<int>(c)) = values[p].real();
            max_re = std::max(max_re, std::abs(values[p].real()));
            max_im = std::max(max_im, std::abs(values[p].imag()));
        }
    }
    out.imag_residue = max_re > 0.0 ? max_im / max_re : max_im;
    return out;
}

} // namespace

FourierMultiplier::FourierMultiplier(Operator op, double tolerance) : op_(std::move(op))
{
    margin_ = ellipticity_margin(op_).real_margin;
    if (!(margin_ > tolerance)) {
        throw PreconditionError("operator '" + op_.name() + "' is not elliptic (margin " + std::to_string(margin_) +
                                "); its symbol has no left inverse");
    }
}

Eigen::MatrixXcd FourierMultiplier::operator()(const Eigen::VectorXd& xi) const
{
    if (xi.size() != op_.n()) {
        throw InputError("frequency has the wrong dimension");
    }
    if (xi.norm() == 0.0) {
        throw DomainError("the multiplier is undefined at xi = 0");
    }
    const Eigen::MatrixXd s = real_symbol(op_, xi);
    const Eigen::MatrixXd pinv = (s.transpose() * s).ldlt().solve(s.transpose());
    return std::complex<double>(0.0, -1.0) * pinv.cast<std::complex<double>>();
}

double FourierMultiplier::left_inverse_residual(const Eigen::VectorXd& xi) const
{
    const Eigen::MatrixXcd is = std::complex<double>(0.0, 1.0) * real_symbol(op_, xi).cast<std::complex<double>>();
    const Eigen::MatrixXcd prod = (*this)(xi)*is;
    return (prod - Eigen::MatrixXcd::Identity(op_.dim_v(), op_.dim_v())).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd multiplier_eval(const Operator& op, const Eigen::VectorXd& xi) { return FourierMultiplier(op)(xi); }

std::vector<Frequency> grid_frequencies(const GridGeometry& g)
{
    const int n = g.n();
    std::vector<Frequency> out(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
        const auto idx = g.multi_index(p);
        Frequency f{Eigen::VectorXd(n), false};
        for (int i = 0; i < n; ++i) {
            const int s = g.shape()[static_cast<std::size_t>(i)];
            const int m = idx[static_cast<std::size_t>(i)];
            const int k = m <= (s - 1) / 2 ? m : m - s;
            if (s % 2 == 0 && m == s / 2) {
                f.nyquist = true;
            }
            f.xi(i) = 2.0 * std::numbers::pi * k / (g.hi()(i) - g.lo()(i));
        }
        out[p] = std::move(f);
    }
    return out;
}

GridField spectral_apply(const Operator& op, const GridField& u)
{
    const auto& g = u.geometry();
    require_periodic(g);
    if (u.dim() != op.dim_v() || g.n() != op.n()) {
        throw InputError("field does not match the operator shape");
    }
    Fft fft(g.shape());
    const Spectra su = forward_all(fft, u);
    Spectra sg(static_cast<std::size_t>(op.dim_w()), std::vector<std::complex<double>>(g.size()));
    const auto freqs = grid_frequencies(g);
    Eigen::VectorXcd uh(op.dim_v());
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (freqs[p].nyquist) {
            continue;
        }
        for (int c = 0; c < op.dim_v(); ++c) {
            uh(c) = su[static_cast<std::size_t>(c)][p];
        }
        const Eigen::VectorXcd gh =
            std::complex<double>(0.0, 1.0) * (real_symbol(op, freqs[p].xi).cast<std::complex<double>>() * uh);
        for (int c = 0; c < op.dim_w(); ++c) {
            sg[static_cast<std::size_t>(c)][p] = gh(c);
        }
    }
    return backward_all(fft, sg, g).u;
}

Reconstruction fourier_reconstruct(const FourierMultiplier& m, const GridField& g)
{
    const Operator& op = m.op();
    const auto& geom = g.geometry();
    require_periodic(geom);
    if (g.dim() != op.dim_w() || geom.n() != op.n()) {
        throw InputError("data does not match the operator shape");
    }
    Fft fft(geom.shape());
    const Spectra sg = forward_all(fft, g);
    const double n_points = static_cast<double>(geom.size());
    double mean = 0.0;
    for (const auto& s : sg) {
        mean = std::max(mean, std::abs(s[0]) / n_points);
    }
    if (mean > 1e-8 * g.max_abs()) {
        throw NotInRangeError("data has nonzero mean " + std::to_string(mean) +
                              " and is not in the range of the operator on the torus");
    }
    Spectra su(static_cast<std::size_t>(op.dim_v()), std::vector<std::complex<double>>(geom.size()));
    const auto freqs = grid_frequencies(geom);
    Eigen::VectorXcd gh(op.dim_w());
    for (std::size_t p = 1; p < geom.size(); ++p) {
        if (freqs[p].nyquist) {
            continue;
        }
        for (int c = 0; c < op.dim_w(); ++c) {
            gh(c) = sg[static_cast<std::size_t>(c)][p];
        }
        const Eigen::VectorXcd uh = m(freqs[p].xi) * gh;
        for (int c = 0; c < op.dim_v(); ++c) {
            su[static_cast<std::size_t>(c)][p] = uh(c);
        }
    }
    return backward_all(fft, su, geom);
}

Reconstruction fourier_reconstruct(const Operator& op, const GridField& g)
{
    return fourier_reconstruct(FourierMultiplier(op), g);
}

GridField mean_free(const GridField& u)
{
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(u.dim());
    for (std::size_t p = 0; p < u.points(); ++p) {
        mean += u.value(p);
    }
    mean /= static_cast<double>(u.points());
    GridField out = u;
    for (std::size_t p = 0; p < u.points(); ++p) {
        out.value(p) -= mean;
    }
    return out;
}

double relative_l2_error(const GridField& a, const GridField& b)
{
    if (!(a.geometry() == b.geometry()) || a.dim() != b.dim()) {
        throw InputError("fields live on different grids");
    }
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        diff += std::pow(a.data()[i] - b.data()[i], 2);
        ref += std::pow(b.data()[i], 2);
    }
    return ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
}

nlohmann::json HomogeneityReport::to_json() const
{
    return {{"lambdas", lambdas},
            {"residuals", residuals},
            {"maxResidual", max_residual},
            {"cells", cells},
            {"sampleDistance", sample_distance},
            {"sourceWidth", source_width}};
}

HomogeneityReport kernel_homogeneity_check(const Operator& op, const std::vector<Eigen::VectorXd>& directions,
                                           const std::vector<double>& lambdas, int cells, int sample_cells,
                                           int width_cells)
{
    const int n = op.n();
    if (directions.empty() || lambdas.empty()) {
        throw InputError("homogeneity check needs directions and dilation factors");
    }
    if (sample_cells <= width_cells) {
        throw InputError("samples must lie outside the mollified source");
    }
    const FourierMultiplier m(op);
    const GridGeometry g = GridGeometry::cube(n, cells, -1.0, 1.0, true);
    const double h = g.max_spacing();
    HomogeneityReport rep;
    rep.lambdas = lambdas;
    rep.cells = cells;
    rep.sample_distance = sample_cells * h;
    rep.source_width = width_cells * h;
    const double largest = *std::max_element(lambdas.begin(), lambdas.end());
    if (largest * rep.sample_distance >= 0.5) {
        throw InputError("dilated samples leave the central half of the torus");
    }

    // Discrete point source of unit mass at a grid point near the origin.
    const std::size_t origin = g.flat_index(std::vector<int>(static_cast<std::size_t>(n), cells / 2));
    const Eigen::VectorXd x0 = g.position(origin);
    GridField delta(g, 1);
    delta.at(origin, 0) = 1.0 / g.cell_volume();
    GridField source = mollify(delta, rep.source_width);

    // K has one column per W-component; each column is reconstructed separately.
    std::vector<GridField> columns;
    for (int c = 0; c < op.dim_w(); ++c) {
        GridField gc(g, op.dim_w());
        for (std::size_t p = 0; p < g.size(); ++p) {
            gc.at(p, c) = source.at(p, 0);
        }
        columns.push_back(fourier_reconstruct(m, mean_free(gc)).u);
    }
    const auto kernel_at = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd k(op.dim_v(), op.dim_w());
        for (int c = 0; c < op.dim_w(); ++c) {
            k.col(c) = columns[static_cast<std::size_t>(c)].interpolate(x0 + x);
        }
        return k;
    };
    for (const double lambda : lambdas) {
        double worst = 0.0;
        for (const auto& d : directions) {
            if (d.size() != n || d.norm() == 0.0) {
                throw InputError("directions must be nonzero vectors of length n");
            }
            const Eigen::VectorXd x = rep.sample_distance * d.normalized();
            const Eigen::MatrixXd kx = kernel_at(x);
            const Eigen::MatrixXd klx = kernel_at(lambda * x) * std::pow(lambda, n - 1);
            worst = std::max(worst, (klx - kx).norm() / kx.norm());
        }
        rep.residuals.push_back(worst);
        rep.max_residual = std::max(rep.max_residual, worst);
    }
    return rep;
}

} // namespace bvlab
