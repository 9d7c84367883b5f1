/*
 * bvlab — command-line driver.
 *
 *   bvlab operator-check  ellipticity margins and null-space dimensions
 *   bvlab inequality      Poincare-Sobolev ratios over random fields and radii
 *   bvlab diff-rate       excess decay rates at sample points
 *   bvlab reconstruct     Fourier round trip u -> A u -> u
 *
 * Every option may also come from a JSON file given with --config (keys are
 * the long option names without dashes); options on the command line win.
 *
 * Exit codes: 0 success, 2 malformed configuration or input, 3 the
 * operator violates a mathematical precondition (not elliptic, no
 * finite-dimensional null-space), 1 anything else.
 */

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bvlab/ballcalc.hpp"
#include "bvlab/diffexp.hpp"
#include "bvlab/errors.hpp"
#include "bvlab/fieldgen.hpp"
#include "bvlab/inequality.hpp"
#include "bvlab/nullspace.hpp"
#include "bvlab/operator.hpp"
#include "bvlab/random.hpp"
#include "bvlab/reconstruct.hpp"
#include "bvlab/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace bvlab;

namespace {

struct RunConfig {
    std::string command;
    std::string builtin;
    std::string operator_file;
    int n = 2;
    int dim_v = 1;
    int degree_cap = 8;
    int resolution = 0; // 0: per-command default
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string config;

    // inequality
    int fields = 20;
    std::vector<double> radii;
    std::string field_kind = "band_limited";
    int band = 0; // 0: per-command default

    // diff-rate
    std::string field = "piecewise";
    std::string variant = "interior";
    int points = 50;
    std::vector<double> exponents;
    bool decomposition = false;
    int trials = 8;
    int refine = 20;
    int cuts = 2;

    // reconstruct
    std::string write_field;

    /// The experiment parameters; output locations are not part of it.
    nlohmann::json experiment() const
    {
        nlohmann::json j{{"command", command},    {"builtin", builtin},       {"operator-file", operator_file},
                         {"n", n},                {"dimV", dim_v},            {"degree-cap", degree_cap},
                         {"resolution", resolution}, {"seed", seed}};
        if (command == "inequality") {
            j.update({{"fields", fields}, {"radii", radii}, {"field-kind", field_kind}, {"band", band}});
        } else if (command == "diff-rate") {
            j.update({{"field", field},
                      {"variant", variant},
                      {"points", points},
                      {"exponents", exponents},
                      {"decomposition", decomposition},
                      {"trials", trials},
                      {"refine", refine},
                      {"cuts", cuts},
                      {"band", band}});
        } else if (command == "reconstruct") {
            j.update({{"field", field}, {"band", band}});
        }
        return j;
    }
};

void add_common(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--builtin", cfg.builtin, "builtin operator: gradient, symmetric_gradient, wirtinger, divergence");
    sub->add_option("--operator-file", cfg.operator_file, "JSON operator description");
    sub->add_option("--n", cfg.n, "space dimension");
    sub->add_option("--dimV", cfg.dim_v, "components of u (gradient only)");
    sub->add_option("--degree-cap", cfg.degree_cap, "highest polynomial degree searched for null-space elements");
    sub->add_option("--resolution", cfg.resolution, "grid cells per axis");
    sub->add_option("--seed", cfg.seed, "seed of every random choice");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--config", cfg.config, "JSON file supplying any of the options");
}

// Fills options absent from the command line from the --config file.
void apply_config_file(CLI::App* sub, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config file '" + path + "' must hold a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw ConfigError("config file '" + path + "': unknown option '" + key + "'");
        }
        if (opt->count() > 0 || key == "config") {
            continue;
        }
        const auto scalar = [](const nlohmann::json& v) {
            return v.is_string() ? v.get<std::string>() : v.dump();
        };
        try {
            if (value.is_array()) {
                for (const auto& v : value) {
                    opt->add_result(scalar(v));
                }
            } else {
                opt->add_result(scalar(value));
            }
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError("config file '" + path + "': option '" + key + "': " + e.what());
        }
    }
}

Operator load_operator(const RunConfig& cfg)
{
    if (!cfg.builtin.empty() && !cfg.operator_file.empty()) {
        throw ConfigError("give either --builtin or --operator-file, not both");
    }
    if (!cfg.operator_file.empty()) {
        return load_operator_file(cfg.operator_file);
    }
    if (cfg.builtin.empty()) {
        throw ConfigError("an operator is required (--builtin or --operator-file)");
    }
    return builtin_operator(cfg.builtin, cfg.n, cfg.dim_v);
}

fs::path output_path(const RunConfig& cfg, const std::string& name)
{
    fs::create_directories(cfg.out);
    return fs::path(cfg.out) / name;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

std::string join(const Eigen::VectorXd& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += (i ? ";" : "") + format_double(v(i));
    }
    return s;
}

int cmd_operator_check(const RunConfig& cfg)
{
    const Operator op = load_operator(cfg);
    const EllipticityReport er = complex_ellipticity_margin(op);
    const NullspaceReport nr = fdn_report(op, cfg.degree_cap);

    const nlohmann::json report{{"operator", op.to_json()}, {"ellipticity", er.to_json()}, {"nullspace", nr.to_json()}};
    open_output(output_path(cfg, "operator_check.json")) << report.dump(2) << "\n";

    auto csv_out = open_output(output_path(cfg, "operator_check.csv"));
    CsvWriter csv(csv_out, {"operator", "degree", "kernel_dim"}, config_hash(cfg.experiment()), cfg.seed);
    for (std::size_t d = 0; d < nr.dims_per_degree.size(); ++d) {
        csv.row({op.name(), std::to_string(d), std::to_string(nr.dims_per_degree[d])});
    }

    std::cout << "operator: " << op.name() << " (n=" << op.n() << ", dimV=" << op.dim_v() << ", dimW=" << op.dim_w()
              << ")\n"
              << "real ellipticity margin: " << format_double(er.real_margin) << "\n"
              << "complex ellipticity margin: " << format_double(er.complex_margin) << "\n"
              << "null-space: " << nr.verdict() << "\n";
    return 0;
}

// Unit-ball trial field of the inequality sweep, pushed forward to `ball`.
struct InequalityField {
    GridField u;
    std::optional<MeasureField> mu;
};

InequalityField inequality_field(const RunConfig& cfg, const PoincareSobolev& ps, const GridGeometry& g,
                                 const Ball& ball, int index)
{
    const Operator& op = ps.op();
    const int n = op.n();
    if (cfg.field_kind == "band_limited") {
        const BandLimitedField f(n, op.dim_v(), cfg.band, 1.0, derive_seed(cfg.seed, "inequality_field", index),
                                 Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 2.0));
        return {GridField::sample(g, op.dim_v(), [&](const Eigen::VectorXd& x) { return f.value(ball.to_unit(x)); }),
                std::nullopt};
    }
    Rng rng = make_rng(cfg.seed, "inequality_field_" + cfg.field_kind, static_cast<std::uint64_t>(index));
    const auto random_kernel_element = [&] {
        PolynomialField p(n, op.dim_v());
        for (const auto& e : ps.kernel()) {
            p += standard_normal(rng) * push_forward(e, ball);
        }
        return p;
    };
    if (cfg.field_kind == "kernel") {
        const PolynomialField p = random_kernel_element();
        return {GridField::sample(g, op.dim_v(), [&](const Eigen::VectorXd& x) { return p(x); }), std::nullopt};
    }
    if (cfg.field_kind == "piecewise") {
        Eigen::VectorXd nu(n);
        for (int i = 0; i < n; ++i) {
            nu(i) = standard_normal(rng);
        }
        nu.normalize();
        const double offset = nu.dot(ball.center()) + (uniform01(rng) - 0.5) * ball.radius();
        PiecewiseKernelSpec spec;
        spec.pieces.push_back({Region{{HalfSpace{nu, offset}}}, random_kernel_element()});
        spec.pieces.push_back({Region{{HalfSpace{-nu, -offset}}}, random_kernel_element()});
        RealizedField rf = realize(FieldSpec{FieldKind{spec}, g}, op);
        return {std::move(rf.u), std::move(rf.mu)};
    }
    throw ConfigError("unknown field kind '" + cfg.field_kind + "' (band_limited, kernel, piecewise)");
}

int cmd_inequality(const RunConfig& cfg)
{
    const Operator op = load_operator(cfg);
    const PoincareSobolev ps(op, cfg.degree_cap);
    const int n = op.n();
    const GridGeometry g = GridGeometry::cube(n, cfg.resolution, -1.0, 1.0, false);
    const std::vector<double> radii = cfg.radii.empty() ? std::vector<double>{0.25, 0.5, 1.0} : cfg.radii;
    const Eigen::VectorXd center = Eigen::VectorXd::Zero(n);

    auto csv_out = open_output(output_path(cfg, "inequality.csv"));
    CsvWriter csv(csv_out, {"operator", "field_id", "center", "radius", "lhs", "rhs", "ratio", "degenerate"},
                  config_hash(cfg.experiment()), cfg.seed);
    auto summary_out = open_output(output_path(cfg, "inequality_summary.csv"));
    CsvWriter summary(summary_out, {"operator", "field_id", "ratio_min", "ratio_max", "relative_spread"},
                      config_hash(cfg.experiment()), cfg.seed);

    double worst_spread = 0.0;
    int degenerate = 0;
    for (int i = 0; i < cfg.fields; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const double r : radii) {
            const Ball ball(center, r);
            const InequalityField f = inequality_field(cfg, ps, g, ball, i);
            const RatioReport rep = f.mu ? ps.ratio_measure(*f.mu, f.u, ball) : ps.ratio(f.u, ball);
            csv.row({op.name(), std::to_string(i), join(center), format_double(r), format_double(rep.lhs),
                     format_double(rep.rhs), rep.degenerate ? "degenerate" : format_double(rep.ratio),
                     rep.degenerate ? "true" : "false"});
            if (rep.degenerate) {
                ++degenerate;
            } else {
                lo = std::min(lo, rep.ratio);
                hi = std::max(hi, rep.ratio);
            }
        }
        if (hi > 0.0) {
            const double spread = (hi - lo) / hi;
            worst_spread = std::max(worst_spread, spread);
            summary.row({op.name(), std::to_string(i), format_double(lo), format_double(hi), format_double(spread)});
        }
    }
    std::cout << "rows: " << csv.rows() << " (degenerate: " << degenerate << ")\n"
              << "largest relative spread of the ratio across radii: " << format_double(worst_spread) << "\n";
    return 0;
}

std::vector<HalfSpace> random_cuts(int n, int count, std::uint64_t seed)
{
    Rng rng = make_rng(seed, "diff_rate_cuts");
    std::vector<HalfSpace> cuts;
    for (int c = 0; c < count; ++c) {
        Eigen::VectorXd nu(n);
        for (int i = 0; i < n; ++i) {
            nu(i) = standard_normal(rng);
        }
        nu.normalize();
        cuts.push_back({nu, 0.6 * (uniform01(rng) - 0.5)});
    }
    return cuts;
}

int cmd_diff_rate(const RunConfig& cfg)
{
    const Operator op = load_operator(cfg);
    const PoincareSobolev ps(op, cfg.degree_cap);
    const int n = op.n();
    const GridGeometry g = GridGeometry::cube(n, cfg.resolution, -1.0, 1.0, false);

    FieldSpec spec{FieldKind{BandLimitedSpec{derive_seed(cfg.seed, "diff_rate_field"), cfg.band, 1.0}}, g};
    if (cfg.field == "piecewise") {
        spec.kind = FieldKind{random_piecewise_kernel(op, random_cuts(n, cfg.cuts, cfg.seed),
                                                      derive_seed(cfg.seed, "diff_rate_field"), 1.0, cfg.degree_cap)};
    } else if (cfg.field != "smooth") {
        throw ConfigError("unknown field '" + cfg.field + "' (piecewise, smooth)");
    }
    SampleVariant variant = SampleVariant::Interior;
    if (cfg.variant == "blind") {
        variant = SampleVariant::Blind;
    } else if (cfg.variant == "interface") {
        variant = SampleVariant::Interface;
    } else if (cfg.variant != "interior") {
        throw ConfigError("unknown variant '" + cfg.variant + "' (interior, blind, interface)");
    }
    const RealizedField field = realize(spec, op);

    RateConfig rc;
    rc.exponents = cfg.exponents;
    rc.radii = dyadic_radii(g);
    rc.decomposition = cfg.decomposition;
    if (cfg.decomposition) {
        SharpConstantConfig sc;
        sc.trials = cfg.trials;
        sc.refine_steps = cfg.refine;
        sc.seed = derive_seed(cfg.seed, "diff_rate_constant");
        rc.constant = estimate_sharp_constant(ps, Ball(Eigen::VectorXd::Zero(n), 1.0), sc).constant;
    }
    const double margin = rc.radii.front() + g.max_spacing();
    const auto points = sample_points(g, field.mu, cfg.points, cfg.seed, variant, margin);
    const RateTable table = critical_rate_experiment(ps, field, points, rc, to_string(variant));

    const auto hash = config_hash(cfg.experiment());
    auto rows_out = open_output(output_path(cfg, "diff_rate.csv"));
    CsvWriter rows(rows_out, {"point", "label", "x", "p", "r", "excess"}, hash, cfg.seed);
    auto summary_out = open_output(output_path(cfg, "diff_rate_summary.csv"));
    CsvWriter summary(summary_out,
                      {"point", "label", "x", "p", "beta", "verdict", "fit_relative_residual", "fit_flagged", "max_I_r",
                       "max_II_r", "bound_holds"},
                      hash, cfg.seed);
    for (std::size_t k = 0; k < table.points.size(); ++k) {
        const PointReport& pr = table.points[k];
        double max_i = 0.0;
        double max_ii = 0.0;
        bool holds = true;
        for (const auto& row : pr.decomposition) {
            max_i = std::max(max_i, row.i_r);
            max_ii = std::max(max_ii, row.ii_r);
            holds = holds && row.bound_holds && row.triangle_holds;
        }
        for (const auto& ex : pr.excess) {
            for (std::size_t j = 0; j < ex.radii.size(); ++j) {
                rows.row({std::to_string(k), pr.label, join(pr.x), format_double(ex.p), format_double(ex.radii[j]),
                          format_double(ex.excess[j])});
            }
            summary.row({std::to_string(k), pr.label, join(pr.x), format_double(ex.p), format_double(ex.beta),
                         ex.differentiable ? "differentiable" : "not_differentiable",
                         format_double(pr.gradient.relative_residual), pr.gradient.flagged ? "true" : "false",
                         pr.decomposition.empty() ? "" : format_double(max_i),
                         pr.decomposition.empty() ? "" : format_double(max_ii),
                         pr.decomposition.empty() ? "" : (holds ? "true" : "false")});
        }
    }
    const double p_crit = table.critical_exponent;
    std::cout << "points: " << table.points.size() << " (" << to_string(variant) << ")\n";
    for (const double p : table.exponents) {
        std::cout << "p = " << format_double(p) << ": pass fraction " << format_double(table.pass_fraction(p))
                  << ", median beta " << format_double(table.median_beta(p)) << "\n";
    }
    if (cfg.decomposition) {
        std::cout << "empirical Poincare constant: " << format_double(rc.constant) << "\n";
    }
    (void)p_crit;
    return 0;
}

int cmd_reconstruct(const RunConfig& cfg)
{
    const Operator op = load_operator(cfg);
    const FourierMultiplier m(op);
    const int n = op.n();
    const GridGeometry g = GridGeometry::cube(n, cfg.resolution, -1.0, 1.0, true);
    GridField u(g, op.dim_v());
    if (cfg.field == "band_limited") {
        if (cfg.band > cfg.resolution / 8) {
            throw ConfigError("band must not exceed a quarter of the Nyquist frequency (resolution / 8)");
        }
        const BandLimitedField f(n, op.dim_v(), cfg.band, 1.0, derive_seed(cfg.seed, "reconstruct_field"), g.lo(),
                                 g.hi() - g.lo());
        u = mean_free(GridField::sample(g, op.dim_v(), [&](const Eigen::VectorXd& x) { return f.value(x); }));
    } else if (cfg.field != "zero") {
        throw ConfigError("unknown field '" + cfg.field + "' (band_limited, zero)");
    }
    const GridField data = spectral_apply(op, u);
    const Reconstruction rec = fourier_reconstruct(m, data);
    const double error = relative_l2_error(rec.u, u);

    auto csv_out = open_output(output_path(cfg, "reconstruct.csv"));
    CsvWriter csv(csv_out, {"operator", "field", "resolution", "band", "relative_l2_error", "imag_residue"},
                  config_hash(cfg.experiment()), cfg.seed);
    csv.row({op.name(), cfg.field, std::to_string(cfg.resolution), std::to_string(cfg.band), format_double(error),
             format_double(rec.imag_residue)});
    if (!cfg.write_field.empty()) {
        write_grid_binary(rec.u, fs::path(cfg.write_field));
    }
    std::cout << "relative L2 error: " << format_double(error) << "\n"
              << "imaginary residue: " << format_double(rec.imag_residue) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bvlab: experiments on first-order constant-coefficient operators"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* check = app.add_subcommand("operator-check", "ellipticity margins and polynomial null-space");
    add_common(check, cfg);

    auto* inequality = app.add_subcommand("inequality", "Poincare-Sobolev ratios");
    add_common(inequality, cfg);
    inequality->add_option("--fields", cfg.fields, "number of random fields");
    inequality->add_option("--radii", cfg.radii, "ball radii (centred at the origin of [-1, 1]^n)");
    inequality->add_option("--field-kind", cfg.field_kind, "band_limited, kernel or piecewise");
    inequality->add_option("--band", cfg.band, "band of the random fields");

    auto* rate = app.add_subcommand("diff-rate", "excess decay rates");
    add_common(rate, cfg);
    rate->add_option("--field", cfg.field, "piecewise or smooth");
    rate->add_option("--variant", cfg.variant, "interior, blind or interface sample points");
    rate->add_option("--points", cfg.points, "number of sample points");
    rate->add_option("--exponents", cfg.exponents, "excess exponents (default n/(n-1))");
    rate->add_flag("--decomposition", cfg.decomposition, "also evaluate the I_r + II_r decomposition");
    rate->add_option("--trials", cfg.trials, "trial fields for the empirical Poincare constant");
    rate->add_option("--refine", cfg.refine, "hill-climbing steps per trial");
    rate->add_option("--cuts", cfg.cuts, "hyperplanes cutting the piecewise field");
    rate->add_option("--band", cfg.band, "band of the smooth field");

    auto* recon = app.add_subcommand("reconstruct", "Fourier reconstruction round trip");
    add_common(recon, cfg);
    recon->add_option("--field", cfg.field, "band_limited or zero");
    recon->add_option("--band", cfg.band, "band of the field");
    recon->add_option("--write-field", cfg.write_field, "write the reconstructed field (binary grid format)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();
        if (cfg.command == "reconstruct" && sub->get_option("--field")->count() == 0) {
            cfg.field = "band_limited";
        }
        if (!cfg.config.empty()) {
            apply_config_file(sub, cfg.config);
        }
        if (cfg.resolution == 0) {
            cfg.resolution = cfg.command == "inequality" ? 128 : 256;
        }
        if (cfg.band == 0) {
            cfg.band = cfg.command == "reconstruct" ? 8 : (cfg.command == "inequality" ? 1 : 2);
        }
        if (cfg.resolution < 8 || cfg.fields < 0 || cfg.points < 0) {
            throw ConfigError("resolution, fields and points must be positive");
        }
        if (cfg.command == "operator-check") {
            return cmd_operator_check(cfg);
        }
        if (cfg.command == "inequality") {
            return cmd_inequality(cfg);
        }
        if (cfg.command == "diff-rate") {
            return cmd_diff_rate(cfg);
        }
        return cmd_reconstruct(cfg);
    } catch (const PreconditionError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const SpecError& e) {
        std::cerr << "field error: " << e.what() << "\n";
        return 2;
    } catch (const ResolutionError& e) {
        std::cerr << "resolution error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
