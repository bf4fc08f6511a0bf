#include "cmfilter/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cmfilter/bounds.hpp"
#include "cmfilter/concentration.hpp"
#include "cmfilter/config.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/filter.hpp"
#include "cmfilter/harness.hpp"

namespace cmf {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<int> resolution;
    std::optional<std::string> trajectory;
    std::string measure = "p";
};

struct Context {
    RunConfig cfg;
    SystemSpec spec;
    fs::path out_dir;
};

Context prepare(const Options& o) {
    Context c;
    c.cfg = load_config(o.config);
    if (o.seed) c.cfg.experiment.seed = *o.seed;
    if (o.workers) {
        if (*o.workers < 1) throw ConfigError("--workers must be positive");
        c.cfg.experiment.workers = *o.workers;
    }
    if (o.resolution) {
        if (*o.resolution < 1) throw ConfigError("--resolution must be positive");
        c.cfg.filter.resolution = *o.resolution;
    }
    if (o.trajectory) c.cfg.filter.trajectory = *o.trajectory;
    if (o.out) {
        c.out_dir = *o.out;
    } else if (const char* env = std::getenv("CMFILTER_OUT"); env && *env) {
        c.out_dir = env;
    } else {
        c.out_dir = c.cfg.output_dir;
    }
    try {
        c.spec = make_system(c.cfg);
    } catch (const ModelError& e) {
        throw ConfigError(std::string("model definition rejected: ") + e.what());
    }
    fs::create_directories(c.out_dir);
    return c;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

BuildMethod method_for(const Context& c, const Grid& g) {
    const auto& f = c.cfg.filter;
    if (f.build == "quadrature") return BuildMethod::quadrature(f.quad_order);
    if (f.build == "monte_carlo") return BuildMethod::monte_carlo(f.mc_samples);
    if (f.build == "exact") return BuildMethod::exact();
    BuildMethod m = auto_method(c.spec, g, f.mc_samples);
    if (m.kind == BuildMethod::Kind::kQuadrature) m.quad_order = f.quad_order;
    return m;
}

int cmd_simulate(const Context& c, const Options& o, std::ostream& out) {
    const auto& e = c.cfg.experiment;
    if (o.measure != "p" && o.measure != "tilde") throw ConfigError("--measure must be 'p' or 'tilde'");
    Trajectory tr = o.measure == "p" ? simulate(c.spec, e.T, e.seed) : simulate_tilde(c.spec, e.T, e.seed);
    Metadata meta{{"model", c.spec.id}, {"measure", o.measure}};
    fs::path p = c.out_dir / "trajectory.csv";
    auto os = open_out(p);
    write_trajectory_csv(os, tr, meta);
    out << "wrote " << p.string() << " (T=" << e.T << ", seed=" << e.seed << ")\n";
    return kExitOk;
}

int cmd_filter(const Context& c, std::ostream& out) {
    const auto& f = c.cfg.filter;
    if (f.trajectory.empty()) throw ConfigError("filter needs --trajectory or filter.trajectory");
    std::ifstream in(f.trajectory);
    if (!in) throw ConfigError("cannot open trajectory '" + f.trajectory + "'");
    Trajectory tr = read_trajectory_csv(in, c.spec.M(), c.spec.N());
    Grid g(c.spec.space, f.resolution);
    BuildMethod m = method_for(c, g);
    QuantizedChain chain = build_chain(c.spec, g, m, c.cfg.experiment.seed);
    FilterRunResult res = run_grid_filter(c.spec, chain, tr.observations);
    Metadata meta{{"model", c.spec.id},
                  {"A", std::to_string(f.resolution)},
                  {"grid_points", std::to_string(res.A)},
                  {"T", std::to_string(tr.T())},
                  {"seed", std::to_string(tr.seed)},
                  {"build", m.name()},
                  {"chain_law", "quantized_chain"},
                  {"trajectory", f.trajectory}};
    fs::path p = c.out_dir / "estimates.csv";
    auto os = open_out(p);
    write_filter_csv(os, res, meta);
    out << "wrote " << p.string() << " (A=" << f.resolution << ", " << res.estimates.size() << " steps)\n";
    return kExitOk;
}

int cmd_converge(const Context& c, std::ostream& out) {
    const auto& e = c.cfg.experiment;
    SweepOptions so;
    so.T = e.T;
    so.resolutions = e.resolutions;
    so.n_traj = e.n_traj;
    so.C = e.C;
    so.seed = e.seed;
    so.A_ref = e.A_ref;
    so.self_check = e.self_check;
    so.workers = e.workers;
    so.mc_samples = c.cfg.filter.mc_samples;
    so.gamma = e.gamma;
    ConvergenceCurve cv = convergence_sweep(c.spec, so);
    Metadata echo = config_echo(c.cfg);
    {
        auto os = open_out(c.out_dir / "curve.csv");
        write_curve_csv(os, cv, echo);
    }
    {
        auto os = open_out(c.out_dir / "kg.csv");
        write_kg_csv(os, cv.kg, echo);
    }
    for (std::size_t i = 0; i < cv.resolutions.size(); ++i)
        out << "A=" << cv.resolutions[i] << " mean_sup_error=" << format_double(cv.mean_error[i])
            << " max_sup_error=" << format_double(cv.max_error[i]) << "\n";
    out << "trajectories: " << cv.n_traj << " used, " << cv.n_rejected << " outside Omega_hat, " << cv.n_aborted
        << " aborted\n";
    out << "reference: " << (cv.reference_exact ? "exact" : "surrogate A_ref=" + std::to_string(cv.A_ref))
        << (cv.reference_exact ? "" : cv.self_consistent ? " (self-consistent)" : " (UNCONVERGED)") << "\n";
    out << "bound dominated: " << (cv.bound_dominated ? "yes" : "NO") << "\n";
    bool ok = cv.bound_dominated && cv.self_consistent && cv.n_aborted == 0;
    return ok ? kExitOk : kExitScientific;
}

bool run_bounds(const Context& c, std::ostream& out) {
    const auto& e = c.cfg.experiment;
    bool ok = true;
    {
        auto os = open_out(c.out_dir / "assumptions.csv");
        os << "status,constant,probe,measured,declared\n";
        try {
            AssumptionConstants emp = verify_assumptions(c.spec, e.n_probe, e.seed);
            const auto& d = c.spec.constants;
            os << "ok,lambda_inf,," << format_double(emp.lambda_inf) << "," << format_double(d.lambda_inf) << "\n";
            os << "ok,lambda_sup,," << format_double(emp.lambda_sup) << "," << format_double(d.lambda_sup) << "\n";
            os << "ok,mu_sup,," << format_double(emp.mu_sup) << "," << format_double(d.mu_sup) << "\n";
            os << "ok,K_mu,," << format_double(emp.K_mu) << "," << format_double(d.K_mu) << "\n";
            os << "ok,K_sigma,," << format_double(emp.K_sigma) << "," << format_double(d.K_sigma) << "\n";
            out << "assumptions: ok\n";
        } catch (const AssumptionViolation& v) {
            os << "violated," << v.constant() << ",\"" << v.probe() << "\"," << format_double(v.measured()) << ","
               << format_double(v.declared()) << "\n";
            out << "assumptions: VIOLATED " << v.what() << "\n";
            ok = false;
        }
    }
    std::vector<BoundReport> reports;
    LipschitzSuiteReport lip = check_lipschitz_suite(c.spec, e.n_pairs, e.seed);
    reports.insert(reports.end(), lip.reports.begin(), lip.reports.end());
    reports.push_back(check_theta_bound(c.spec, e.n_trials, e.seed));
    if (c.spec.N() <= 5) reports.push_back(check_adjugate_bound(e.n_trials, c.spec.N(), e.seed));
    for (MatrixNorm n : {MatrixNorm::kFrobenius, MatrixNorm::kSpectral, MatrixNorm::kMaxColSum, MatrixNorm::kMaxRowSum}) {
        reports.push_back(random_product_trials(e.n_trials, 3, 4, n, e.seed));
        reports.push_back(random_pair_trials(e.n_trials, 3, n, e.seed));
    }
    BoundReport tight = check_product_bound({Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 3.0)},
                                {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)}, MatrixNorm::kFrobenius);
    tight.lemma = "product_difference_scalar_witness";
    reports.push_back(tight);
    {
        auto os = open_out(c.out_dir / "bounds.csv");
        write_bound_csv(os, reports);
    }
    for (const auto& r : reports) {
        out << r.lemma << ": worst ratio " << format_double(r.worst_ratio) << " over " << r.n_trials << " trials "
            << (r.pass() ? "ok" : "FAILED") << "\n";
        ok = ok && r.pass();
    }
    return ok;
}

bool run_concentration(const Context& c, std::ostream& out) {
    const auto& e = c.cfg.experiment;
    std::vector<Chi2TailResult> tails;
    for (double u : {0.5, 1.0, 2.0, 5.0}) tails.push_back(chi2_tail_check(c.spec.N(), u, e.n_concentration, e.seed));
    ConcentrationReport rep = concentration_experiment(c.spec, e.T, e.C, e.n_concentration, e.seed, e.workers, e.gamma);
    {
        auto os = open_out(c.out_dir / "concentration.csv");
        write_concentration_csv(os, {rep});
    }
    {
        auto os = open_out(c.out_dir / "chi2.csv");
        write_chi2_csv(os, tails);
    }
    bool ok = rep.pass();
    for (const auto& t : tails) {
        out << "chi2 N=" << t.N << " u=" << format_double(t.u) << ": empirical " << format_double(t.empirical)
            << " bound " << format_double(t.bound) << (t.pass() ? " ok" : " FAILED") << "\n";
        ok = ok && t.pass();
    }
    out << "omega_hat N=" << rep.N << " C=" << format_double(rep.C) << " T=" << rep.T << ": P "
        << format_double(rep.empirical_p) << ", P~ " << format_double(rep.empirical_tilde) << ", bound "
        << format_double(rep.bound) << (rep.pass() ? " ok" : " FAILED") << "\n";
    return ok;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Change-of-measure grid filtering toolkit"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment configuration file")->required();
        sub->add_option("--seed", o.seed, "override experiment.seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "worker threads");
        sub->add_option("--resolution", o.resolution, "grid cells per coordinate for filter");
    };
    auto* sim = app.add_subcommand("simulate", "simulate a trajectory");
    add_common(sim);
    sim->add_option("--measure", o.measure, "p (model) or tilde (reference measure)");
    auto* fil = app.add_subcommand("filter", "run the grid filter on a trajectory file");
    add_common(fil);
    fil->add_option("--trajectory", o.trajectory, "trajectory CSV");
    auto* conv = app.add_subcommand("converge", "error versus resolution sweep");
    add_common(conv);
    auto* vb = app.add_subcommand("verify-bounds", "check assumptions and matrix inequalities");
    add_common(vb);
    auto* vc = app.add_subcommand("verify-concentration", "chi-squared tail and Omega_hat probabilities");
    add_common(vc);
    auto* va = app.add_subcommand("verify", "verify-bounds and verify-concentration");
    add_common(va);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        Context c = prepare(o);
        if (*sim) return cmd_simulate(c, o, out);
        if (*fil) return cmd_filter(c, out);
        if (*conv) return cmd_converge(c, out);
        if (*vb) return run_bounds(c, out) ? kExitOk : kExitScientific;
        if (*vc) return run_concentration(c, out) ? kExitOk : kExitScientific;
        bool b = run_bounds(c, out);
        bool k = run_concentration(c, out);
        return b && k ? kExitOk : kExitScientific;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const AssumptionViolation& e) {
        err << "error: " << e.what() << "\n";
        return kExitScientific;
    } catch (const DegenerateUpdateError& e) {
        err << "error: " << e.what() << "\n";
        return kExitScientific;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace cmf
