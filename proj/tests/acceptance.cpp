/*
 * Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
 * criterion fails. Reference values come from the oracles in oracles.hpp or
 * from closed forms worked out in the comments below, never from the code
 * under test.
 *
 * usage: bvlab_acceptance <path to the bvlab executable>
 */

#include <chrono>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "bvlab/ballcalc.hpp"
#include "bvlab/diffexp.hpp"
#include "bvlab/errors.hpp"
#include "bvlab/fieldgen.hpp"
#include "bvlab/inequality.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/random.hpp"
#include "bvlab/reconstruct.hpp"
#include "oracles.hpp"

using namespace bvlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double relative_spread(const std::vector<double>& v)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return (*hi - *lo) / std::abs(*hi);
}

// 1. FDN detection against exact rational kernel dimensions.
void fdn_detection(Outcome& o)
{
    const auto t0 = Clock::now();
    struct Case {
        Operator op;
        std::string verdict;
    };
    const std::vector<Case> cases = {{symmetric_gradient(2), "FDN(l=1, totalDim=3)"},
                                     {symmetric_gradient(3), "FDN(l=1, totalDim=6)"},
                                     {gradient(2), "FDN(l=0, totalDim=1)"},
                                     {wirtinger(), "NotFdnUpTo(8)"}};
    std::vector<NullspaceReport> reports;
    for (const auto& c : cases) {
        reports.push_back(fdn_report(c.op, 8));
    }
    const double elapsed = seconds_since(t0);
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& rep = reports[k];
        o.require(rep.verdict() == cases[k].verdict, cases[k].op.name() + " verdict " + rep.verdict());
        for (std::size_t d = 0; d < rep.dims_per_degree.size(); ++d) {
            const int exact = oracle::kernel_dimension(cases[k].op, static_cast<int>(d));
            o.require(rep.dims_per_degree[d] == exact,
                      cases[k].op.name() + " degree " + std::to_string(d) + " dimension");
        }
    }
    const auto& e2 = reports[0].dims_per_degree;
    o.require(e2.size() >= 3 && e2[0] == 2 && e2[1] == 1 && e2[2] == 0, "symmetric gradient dims (2,1,0,...)");
    for (int d : reports[3].dims_per_degree) {
        o.require(d == 2, "wirtinger dimension 2 at every degree");
    }
    o.require(elapsed < 5.0, "runtime");
    o.detail << "verdicts " << reports[0].verdict() << ", " << reports[1].verdict() << ", " << reports[2].verdict()
             << ", " << reports[3].verdict() << "; " << elapsed << " s";
}

// 2. Ellipticity margins and the complex witness of the Wirtinger operator.
void ellipticity(Outcome& o)
{
    const auto t0 = Clock::now();
    const double g = ellipticity_margin(gradient(2)).real_margin;
    const double e = ellipticity_margin(symmetric_gradient(2)).real_margin;
    const auto w = complex_ellipticity_margin(wirtinger());
    const double elapsed = seconds_since(t0);
    // closed forms: |xi| = 1 for the gradient; |sym(v xi^T)|^2 = (|v|^2 + (v.xi)^2) / 2 >= 1/2
    // for unit v, xi; |A[xi] v| = |xi| |v| / 2 for the Wirtinger operator
    o.require(std::abs(g - 1.0) <= 1e-6, "gradient margin");
    o.require(std::abs(e - std::sqrt(0.5)) <= 1e-4, "symmetric gradient margin");
    o.require(std::abs(w.real_margin - 0.5) <= 1e-6, "wirtinger real margin");
    o.require(w.complex_margin <= 1e-5, "wirtinger complex margin");
    const std::complex<double> i(0.0, 1.0);
    Eigen::VectorXcd xi(2);
    xi << 1.0, i;
    Eigen::VectorXcd v(2);
    v << 1.0, i;
    const double witness = (symbol(wirtinger(), xi).value * v).norm();
    o.require(witness <= 1e-8, "witness at xi = (1, i)");
    o.require(elapsed < 10.0, "runtime");
    o.detail << "gradient " << g << ", symmetric gradient " << e << ", wirtinger real " << w.real_margin
             << " complex " << w.complex_margin << ", |A[(1,i)](1,i)| = " << witness << "; " << elapsed << " s";
}

// 3. Projection onto the null-space.
void projection_suite(Outcome& o)
{
    const Operator op = symmetric_gradient(2);
    const auto kernel = kernel_basis(op);

    // idempotence of the exact projection on a random cubic field
    const Ball ball(Eigen::Vector2d(0.3, -0.4), 1.7);
    std::vector<PolynomialField> pushed;
    for (const auto& k : kernel) {
        pushed.push_back(push_forward(k, ball));
    }
    const ProjectionBasis pb = orthonormalize(pushed, ball);
    Rng rng = make_rng(1, "acceptance_projection");
    PolynomialField v(2, 2);
    for (const auto& a : monomials_up_to(2, 3)) {
        v.add_term(0, a, standard_normal(rng));
        v.add_term(1, a, standard_normal(rng));
    }
    const PolynomialField pv = l2_project(v, pb);
    const double idem = (l2_project(pv, pb) - pv).coefficient_max() / pv.coefficient_max();
    o.require(idem <= 1e-8, "idempotence");

    std::vector<VectorFunction> kernel_trials;
    for (const auto& k : kernel) {
        kernel_trials.push_back([k](const Eigen::VectorXd& z) { return k(z); });
    }
    double kernel_dev = 0.0;
    for (double r : kernel_trials.empty() ? std::vector<double>{} : std::vector<double>{0.25, 1.0, 4.0}) {
        for (double q : projection_stability_constant(op, Ball(Eigen::Vector2d::Zero(), r), kernel_trials).ratios) {
            kernel_dev = std::max(kernel_dev, std::abs(q - 1.0));
        }
    }
    o.require(kernel_dev <= 1e-8, "stability ratio 1 on the kernel");

    std::vector<VectorFunction> trials;
    for (int t = 0; t < 12; ++t) {
        const BandLimitedField f(2, 2, 2, 1.0, derive_seed(1, "acceptance_stability", t), Eigen::Vector2d(-1, -1),
                                 Eigen::Vector2d(2, 2));
        trials.push_back([f](const Eigen::VectorXd& z) { return f.value(z); });
    }
    std::vector<double> constants;
    std::vector<double> sups;
    for (double r : {0.25, 1.0, 4.0}) {
        const auto s = projection_stability_constant(op, Ball(Eigen::Vector2d(0.5, -1.0), r), trials);
        constants.push_back(s.constant);
        // sup |e_j| r^{n/2} should not depend on r
        sups.push_back(s.sup_bound * r);
    }
    o.require(relative_spread(constants) <= 0.02, "stability constant across radii");
    o.require(relative_spread(sups) <= 0.02, "sup-norm scaling r^{-n/2}");
    o.detail << "idempotence " << idem << ", kernel ratio deviation " << kernel_dev << ", constant "
             << constants[1] << " (spread " << relative_spread(constants) << "), scaled sup " << sups[1]
             << " (spread " << relative_spread(sups) << ")";
}

// 4. Norm equivalence on polynomials of bounded degree.
void norm_equivalence(Outcome& o)
{
    const std::vector<Ball> balls = {Ball(Eigen::Vector2d(0.0, 0.0), 1.0), Ball(Eigen::Vector2d(2.0, -1.0), 0.25),
                                     Ball(Eigen::Vector2d(-3.0, 0.5), 4.0), Ball(Eigen::Vector2d(0.1, 0.2), 0.01),
                                     Ball(Eigen::Vector2d(10.0, 10.0), 2.5)};
    const auto l0 = polynomial_norm_equivalence_constant(0, 2, balls, 8);
    o.require(l0.constant == 1.0, "l = 0 constant is 1");
    // P(x) = x on [-1, 1]: sup |P| = 1, mean |P| = 1/2
    PolynomialField x(1, 1);
    x.add_term(0, {1}, 1.0);
    const double witness = norm_equivalence_ratio(x, Ball(Eigen::VectorXd::Zero(1), 1.0));
    o.require(std::abs(witness - 2.0) <= 1e-6, "l = 1, n = 1 witness");
    const auto l2 = polynomial_norm_equivalence_constant(2, 2, balls, 40);
    o.require(relative_spread(l2.per_ball) <= 0.02, "constant independent of the ball");
    o.detail << "l=0 constant " << l0.constant << ", witness " << witness << ", l=2 constant " << l2.constant
             << " (spread " << relative_spread(l2.per_ball) << " over 5 balls)";
}

// 5. Poincare-Sobolev ratios for the symmetric gradient on a 128^2 grid.
void poincare_sobolev(Outcome& o)
{
    const auto t0 = Clock::now();
    const PoincareSobolev ps(symmetric_gradient(2));
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const std::vector<double> radii = {0.25, 0.5, 1.0};
    int finite = 0;
    double worst_spread = 0.0;
    double worst_shift = 0.0;
    const auto rigid = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(1.0 + 3.0 * x(1), -2.0 - 3.0 * x(0)); };
    for (int i = 0; i < 100; ++i) {
        const BandLimitedField f(2, 2, 1, 1.0, derive_seed(1, "inequality_field", i), Eigen::Vector2d(-1, -1),
                                 Eigen::Vector2d(2, 2));
        std::vector<double> ratios;
        bool all_finite = true;
        for (double r : radii) {
            const Ball ball(Eigen::Vector2d::Zero(), r);
            const GridField u =
                GridField::sample(g, 2, [&](const Eigen::VectorXd& x) { return f.value(ball.to_unit(x)); });
            const RatioReport rep = ps.ratio(u, ball);
            all_finite = all_finite && !rep.degenerate && std::isfinite(rep.ratio) && rep.ratio > 0.0;
            ratios.push_back(rep.ratio);
            if (i < 10 && r == 0.5) {
                const GridField shifted = GridField::sample(g, 2, [&](const Eigen::VectorXd& x) {
                    return Eigen::VectorXd(f.value(ball.to_unit(x)) + 50.0 * rigid(x));
                });
                worst_shift = std::max(worst_shift, std::abs(ps.ratio(shifted, ball).ratio - rep.ratio) / rep.ratio);
            }
        }
        finite += all_finite ? 1 : 0;
        worst_spread = std::max(worst_spread, relative_spread(ratios));
    }
    bool refused = false;
    try {
        PoincareSobolev w(wirtinger());
    } catch (const PreconditionError&) {
        refused = true;
    }
    const double elapsed = seconds_since(t0);
    o.require(finite == 100, "finite ratios");
    o.require(worst_spread <= 0.02, "scale invariance");
    o.require(worst_shift <= 1e-6, "kernel-shift invariance");
    o.require(refused, "wirtinger refused");
    o.require(elapsed < 120.0, "runtime");
    o.detail << finite << "/100 finite, worst spread across radii " << worst_spread << ", kernel shift "
             << worst_shift << ", wirtinger refused " << (refused ? "yes" : "no") << "; " << elapsed << " s";
}

// 6. Fourier reconstruction.
void reconstruction(Outcome& o)
{
    const std::vector<Operator> ops = {gradient(2), symmetric_gradient(2), wirtinger()};
    const GridGeometry g = GridGeometry::cube(2, 256, -1.0, 1.0, true);
    double worst_error = 0.0;
    for (const auto& op : ops) {
        const BandLimitedField f(2, op.dim_v(), 8, 1.0, derive_seed(1, "acceptance_reconstruct"), g.lo(),
                                 g.hi() - g.lo());
        const GridField u =
            mean_free(GridField::sample(g, op.dim_v(), [&](const Eigen::VectorXd& x) { return f.value(x); }));
        // data from the analytic derivative, not from the spectral forward map
        const GridField data = GridField::sample(
            g, op.dim_w(), [&](const Eigen::VectorXd& x) { return op.apply_to_gradient(f.gradient(x)); });
        worst_error = std::max(worst_error, relative_l2_error(fourier_reconstruct(op, data).u, u));
    }
    o.require(worst_error <= 1e-8, "round trip");

    double worst_left = 0.0;
    Rng rng = make_rng(1, "acceptance_xi");
    for (const auto& op : ops) {
        const FourierMultiplier m(op);
        for (int k = 0; k < 1000; ++k) {
            const Eigen::Vector2d xi(standard_normal(rng), standard_normal(rng));
            worst_left = std::max(worst_left, m.left_inverse_residual(xi));
        }
    }
    o.require(worst_left <= 1e-10, "left inverse");

    std::vector<Eigen::VectorXd> dirs;
    for (int k = 0; k < 6; ++k) {
        const double t = 0.3 + k * std::numbers::pi / 3.0;
        dirs.push_back(Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
    double worst_homog = 0.0;
    for (const auto& op : {gradient(2), symmetric_gradient(2)}) {
        worst_homog = std::max(worst_homog, kernel_homogeneity_check(op, dirs, {2.0}, 512).max_residual);
    }
    o.require(worst_homog <= 0.05, "kernel homogeneity");
    o.detail << "round trip error " << worst_error << ", left inverse residual " << worst_left
             << " (3000 xi), homogeneity residual at lambda=2 " << worst_homog;
}

// 7. A(M) equals the absolutely continuous density at interior points.
void structure_identity(Outcome& o)
{
    const Operator op = symmetric_gradient(2);
    const GridGeometry g = GridGeometry::cube(2, 128, -1.0, 1.0);
    const FieldKind smooth{BandLimitedSpec{derive_seed(1, "acceptance_structure"), 1, 1.0}};
    const std::vector<HalfSpace> cuts = {{Eigen::Vector2d(0.6, 0.8), 0.13}, {Eigen::Vector2d(-0.8, 0.6), -0.21}};
    SumSpec sum;
    sum.terms.push_back(std::make_shared<FieldKind>(FieldKind{random_piecewise_kernel(op, cuts, 5)}));
    sum.terms.push_back(std::make_shared<FieldKind>(smooth));
    double worst = 0.0;
    for (const FieldKind& kind : {smooth, FieldKind{sum}}) {
        const RealizedField f = realize(FieldSpec{kind, g}, op);
        const auto pts = sample_points(g, f.mu, 50, 3, SampleVariant::Interior, 0.1);
        worst = std::max(worst, structure_identity_check(op, f.u, f.mu, pts).max_relative_deviation);
    }
    o.require(worst <= 0.01, "relative deviation");
    o.detail << "max relative deviation " << worst << " (band-limited and piecewise-rigid + band-limited, 50 points each)";
}

struct RateRun {
    RateTable interior;
    RateTable interface;
    double constant = 0.0;
    double seconds = 0.0;
};

RateRun rate_experiment()
{
    const auto t0 = Clock::now();
    const Operator op = symmetric_gradient(2);
    const PoincareSobolev ps(op);
    const GridGeometry g = GridGeometry::cube(2, 256, -1.0, 1.0);
    Rng rng = make_rng(1, "acceptance_cuts");
    std::vector<HalfSpace> cuts;
    for (int c = 0; c < 2; ++c) {
        Eigen::Vector2d nu(standard_normal(rng), standard_normal(rng));
        cuts.push_back({nu.normalized(), 0.6 * (uniform01(rng) - 0.5)});
    }
    const RealizedField f =
        realize(FieldSpec{FieldKind{random_piecewise_kernel(op, cuts, derive_seed(1, "acceptance_field"))}, g}, op);
    SharpConstantConfig sc;
    sc.trials = 8;
    sc.refine_steps = 20;
    RateRun run;
    run.constant = estimate_sharp_constant(ps, Ball(Eigen::Vector2d::Zero(), 1.0), sc).constant;
    RateConfig rc;
    rc.exponents = {1.0, 1.5, 2.0};
    rc.radii = dyadic_radii(g);
    rc.decomposition = true;
    rc.constant = run.constant;
    const double margin = rc.radii.front() + g.max_spacing();
    run.interior = critical_rate_experiment(ps, f, sample_points(g, f.mu, 50, 1, SampleVariant::Interior, margin), rc);
    RateConfig ic = rc;
    ic.decomposition = false;
    run.interface = critical_rate_experiment(
        ps, f, sample_points(g, f.mu, 50, 1, SampleVariant::Interface, margin), ic, "interface");
    run.seconds = seconds_since(t0);
    return run;
}

// 8. Critical-rate experiment for piecewise rigid fields.
void critical_rate(Outcome& o, const RateRun& run)
{
    int interior_pass = 0;
    int bound_rows = 0;
    int bound_ok = 0;
    for (const auto& p : run.interior.points) {
        for (const auto& e : p.excess) {
            if (e.p == 2.0 && e.beta >= 1.1) {
                ++interior_pass;
            }
        }
        for (const auto& row : p.decomposition) {
            ++bound_rows;
            bound_ok += row.bound_holds ? 1 : 0;
        }
    }
    int interface_fail = 0;
    for (const auto& p : run.interface.points) {
        for (const auto& e : p.excess) {
            if (e.p == 1.0 && e.beta <= 1.0) {
                ++interface_fail;
            }
        }
    }
    const int ni = static_cast<int>(run.interior.points.size());
    const int nf = static_cast<int>(run.interface.points.size());
    o.require(ni == 50 && interior_pass == ni, "interior beta >= 1.1 at p = 2");
    o.require(nf > 0 && interface_fail == nf, "interface beta <= 1 at p = 1");
    o.require(bound_rows > 0 && bound_ok == bound_rows, "decomposition bound");
    o.require(run.seconds < 300.0, "runtime");
    o.detail << "interior " << interior_pass << "/" << ni << " with beta >= 1.1 at p=2 (median "
             << run.interior.median_beta(2.0) << "), interface " << interface_fail << "/" << nf
             << " with beta <= 1 at p=1 (median " << run.interface.median_beta(1.0) << "), bound " << bound_ok << "/"
             << bound_rows << " rows with C = " << run.constant << "; " << run.seconds << " s";
}

// 9. E_p is nondecreasing in p; verdicts are monotone.
void monotonicity(Outcome& o, const RateRun& run)
{
    int checked = 0;
    int violations = 0;
    for (const RateTable* t : {&run.interior, &run.interface}) {
        for (const auto& p : t->points) {
            for (std::size_t k = 1; k < p.excess.size(); ++k) {
                for (std::size_t j = 0; j < p.excess[k].excess.size(); ++j) {
                    const double lo = p.excess[k - 1].excess[j];
                    const double hi = p.excess[k].excess[j];
                    ++checked;
                    // Jensen: equality up to rounding for constant |remainder|
                    violations += hi < lo * (1.0 - 1e-12) ? 1 : 0;
                }
            }
        }
        o.require(t->verdicts_monotone(), "verdict monotonicity");
    }
    o.require(violations == 0, "E_p nondecreasing in p");
    o.detail << checked << " (point, r, p) comparisons, " << violations << " violations; verdicts monotone";
}

// 10. Two CLI runs with the same configuration give identical CSVs.
void reproducibility(Outcome& o, const std::string& cli)
{
    const fs::path root = fs::temp_directory_path() / "bvlab_acceptance_repro";
    fs::remove_all(root);
    const std::vector<std::string> commands = {
        "operator-check --builtin symmetric_gradient",
        "inequality --builtin symmetric_gradient --fields 4",
        "diff-rate --builtin symmetric_gradient --points 8 --decomposition --trials 2 --refine 5",
        "reconstruct --builtin wirtinger --resolution 128"};
    int compared = 0;
    for (const char* run : {"a", "b"}) {
        fs::create_directories(root / run);
        for (const auto& c : commands) {
            const std::string cmd = cli + " " + c + " --seed 7 --out " + (root / run).string() + " > /dev/null";
            const int status = std::system(cmd.c_str());
            o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "cli run: " + c);
        }
    }
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        if (entry.path().extension() != ".csv") {
            continue;
        }
        const fs::path other = root / "b" / entry.path().filename();
        o.require(fs::exists(other) && slurp(entry.path()) == slurp(other),
                  "identical " + entry.path().filename().string());
        ++compared;
    }
    o.require(compared >= 5, "all csv outputs present");
    o.detail << compared << " CSV files byte-identical across two runs";
    fs::remove_all(root);
}

} // namespace

int main(int argc, char** argv)
{
    if (argc < 2) {
        std::cerr << "usage: " << argv[0] << " <bvlab executable>\n";
        return 2;
    }
    const std::string cli = argv[1];
    int failures = 0;
    const auto report = [&](int id, const std::string& name, const std::function<void(Outcome&)>& body) {
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail.str()
                  << std::endl;
    };
    report(1, "null-space detection", fdn_detection);
    report(2, "ellipticity margins", ellipticity);
    report(3, "projection suite", projection_suite);
    report(4, "norm equivalence", norm_equivalence);
    report(5, "Poincare-Sobolev ratios", poincare_sobolev);
    report(6, "reconstruction", reconstruction);
    report(7, "structure identity", structure_identity);
    std::optional<RateRun> run;
    try {
        run = rate_experiment();
    } catch (const std::exception& e) {
        std::cerr << "rate experiment failed: " << e.what() << "\n";
    }
    report(8, "critical rate", [&](Outcome& o) {
        o.require(run.has_value(), "experiment ran");
        if (run) {
            critical_rate(o, *run);
        }
    });
    report(9, "monotonicity in p", [&](Outcome& o) {
        o.require(run.has_value(), "experiment ran");
        if (run) {
            monotonicity(o, *run);
        }
    });
    report(10, "reproducibility", [&](Outcome& o) { reproducibility(o, cli); });
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
