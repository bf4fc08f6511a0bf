#include "cmfilter/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "cmfilter/bounds.hpp"
#include "cmfilter/concentration.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/parallel.hpp"

namespace cmf {

ReferenceFilter::ReferenceFilter(const SystemSpec& spec, int max_A, int A_ref, std::uint64_t seed, int mc_samples)
    : spec_(&spec) {
    if (spec.finite_law) {
        exact_ = true;
        return;
    }
    if (A_ref == 0) A_ref = 8 * max_A;
    if (A_ref < 8 * max_A)
        throw ConfigError("reference resolution " + std::to_string(A_ref) + " must be at least 8x the largest resolution " +
                          std::to_string(max_A));
    A_ref_ = A_ref;
    Grid g(spec.space, A_ref);
    chain_ = build_chain(spec, g, auto_method(spec, g, mc_samples), seed);
}

std::vector<Vector> ReferenceFilter::operator()(const std::vector<Vector>& observations) const {
    if (exact_) return exact_forward_filter(*spec_, observations);
    return run_grid_filter(*spec_, *chain_, observations).estimates;
}

std::string ReferenceFilter::label() const {
    return exact_ ? "exact" : "surrogate_A" + std::to_string(A_ref_);
}

std::vector<Vector> reference_filter(const SystemSpec& spec, const std::vector<Vector>& observations, int max_A,
                                     int A_ref, std::uint64_t seed) {
    return ReferenceFilter(spec, max_A, A_ref, seed)(observations);
}

double half_cell_l1(const StateSpace& space, int A) {
    return 0.5 * (space.upper - space.lower).sum() / A;
}

KGReport kg_evaluate(const SystemSpec& spec, int T, double C, const std::vector<int>& resolutions,
                     std::optional<double> gamma) {
    const auto& c = spec.constants;
    const DerivedConstants dc = analytic_derived_constants(spec);
    KGReport r;
    r.T = T;
    r.C = C;
    r.N = spec.N();
    r.gamma = gamma ? *gamma : gamma_filter(c);
    r.gamma_tilde = std::sqrt(r.gamma) + c.mu_sup;
    r.K_INV = dc.K_INV;
    r.K_DET = dc.K_DET;
    r.K_sigma = c.K_sigma;
    r.lambda_inf = c.lambda_inf;
    r.K_o = c.K_mu * 2.0 * r.gamma_tilde / c.lambda_inf + dc.K_INV * r.gamma_tilde * r.gamma_tilde;

    const double N = r.N, lam = c.lambda_inf, L = std::log(lam);
    const double lg = 1.0 + std::log(1.0 + T);
    r.K_G_v1 = r.K_o * C * N * lg * (T + 1.0) / std::pow(lam, N / 2.0) +
               r.K_DET * r.K_sigma * N * N * (T + 1.0) / (2.0 * std::pow(lam, N));
    const double tail = std::pow(lam, -2.0 / L) / (L * L);
    r.K_G_v2 = 16.0 * r.K_o * C * lg * tail / N + 8.0 * r.K_DET * r.K_sigma * std::pow(lam, -N) * tail;

    r.resolutions = resolutions;
    for (int A : resolutions) {
        double l1 = half_cell_l1(spec.space, A);
        r.sup_l1.push_back(l1);
        r.bound_v1.push_back(r.K_G_v1 * l1);
        r.bound_v2.push_back(r.K_G_v2 * l1);
    }
    return r;
}

double log_denominator_bound(const SystemSpec& spec, int T, double C, double gamma) {
    const auto& c = spec.constants;
    const double root = std::sqrt(omega_threshold(gamma, C, spec.N(), T)) + c.mu_sup;
    return -root * root * (T + 1.0) / (2.0 * c.lambda_inf) - 0.5 * spec.N() * (T + 1.0) * std::log(c.lambda_sup);
}

double ConvergenceCurve::analytic_bound(std::size_t i) const {
    return std::exp(std::min(log_bound_v1[i], log_bound_v2[i]));
}

namespace {

struct TrajOutcome {
    bool member = false;
    bool aborted = false;
    std::string diagnostic;
    std::vector<double> err;            // per A
    std::vector<std::vector<double>> l1;  // per A, per t
    double lambda_gap = 0.0;
    double self_gap = 0.0;
};

double sup_l1_error(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    double e = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) e = std::max(e, (a[t] - b[t]).lpNorm<1>());
    return e;
}

double sup_abs_gap(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    double e = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) e = std::max(e, (a[t] - b[t]).cwiseAbs().maxCoeff());
    return e;
}

}  // namespace

ConvergenceCurve convergence_sweep(const SystemSpec& spec, const SweepOptions& opts) {
    validate(spec);
    auto start = std::chrono::steady_clock::now();
    if (opts.resolutions.empty()) throw ConfigError("convergence sweep needs resolutions");
    for (std::size_t i = 0; i < opts.resolutions.size(); ++i) {
        if (opts.resolutions[i] < 1 || (i > 0 && opts.resolutions[i] <= opts.resolutions[i - 1]))
            throw ConfigError("resolutions must be positive and strictly increasing");
    }
    if (opts.T < 0 || opts.n_traj < 1) throw ConfigError("sweep needs T >= 0 and n_traj >= 1");
    if (!(opts.C >= 1.0)) throw ConfigError("C must be at least 1");

    ConvergenceCurve cv;
    cv.resolutions = opts.resolutions;
    cv.T = opts.T;
    cv.C = opts.C;
    cv.gamma = opts.gamma ? *opts.gamma : gamma_filter(spec.constants);
    cv.n_total = opts.n_traj;
    const int max_A = opts.resolutions.back();
    const int A_ref = opts.A_ref > 0 ? opts.A_ref : 8 * max_A;

    std::vector<QuantizedChain> chains;
    for (int A : opts.resolutions) {
        Grid g(spec.space, A);
        chains.push_back(build_chain(spec, g, auto_method(spec, g, opts.mc_samples), opts.seed));
    }
    ReferenceFilter ref(spec, max_A, A_ref, opts.seed, opts.mc_samples);
    cv.reference_exact = ref.exact();
    cv.A_ref = ref.exact() ? 0 : A_ref;
    std::optional<ReferenceFilter> ref2;
    if (!ref.exact() && opts.self_check) ref2.emplace(spec, max_A, 2 * A_ref, opts.seed, opts.mc_samples);

    const std::size_t nA = opts.resolutions.size();
    std::vector<TrajOutcome> out(static_cast<std::size_t>(opts.n_traj));
    parallel_for(opts.n_traj, opts.workers, [&](long i) {
        TrajOutcome& o = out[static_cast<std::size_t>(i)];
        const std::uint64_t s = splitmix64(opts.seed + static_cast<std::uint64_t>(i));
        Trajectory tr = simulate(spec, opts.T, s);
        o.member = omega_hat_membership(tr, opts.C, cv.gamma);
        if (!o.member) return;
        try {
            auto reference = ref(tr.observations);
            if (ref2) o.self_gap = sup_l1_error(reference, (*ref2)(tr.observations));
            for (std::size_t a = 0; a < nA; ++a) {
                auto hat = run_grid_filter(spec, chains[a], tr.observations, LikelihoodForm::kNormalized);
                auto full = run_grid_filter(spec, chains[a], tr.observations, LikelihoodForm::kFull);
                o.err.push_back(sup_l1_error(hat.estimates, reference));
                o.lambda_gap = std::max(o.lambda_gap, sup_abs_gap(hat.estimates, full.estimates));
                std::vector<double> l1;
                for (const auto& x : tr.states) l1.push_back((chains[a].grid.center(chains[a].grid.index(x)) - x).lpNorm<1>());
                o.l1.push_back(std::move(l1));
            }
        } catch (const Error& e) {
            o.aborted = true;
            o.diagnostic = "trajectory " + std::to_string(i) + " (seed " + std::to_string(s) + "): " + e.what();
        }
    });

    cv.mean_error.assign(nA, 0.0);
    cv.max_error.assign(nA, 0.0);
    std::vector<std::vector<double>> l1_sum(nA, std::vector<double>(static_cast<std::size_t>(opts.T) + 1, 0.0));
    for (const auto& o : out) {
        if (!o.member) {
            ++cv.n_rejected;
            continue;
        }
        if (o.aborted) {
            ++cv.n_aborted;
            cv.diagnostics.push_back(o.diagnostic);
            continue;
        }
        ++cv.n_traj;
        for (std::size_t a = 0; a < nA; ++a) {
            cv.mean_error[a] += o.err[a];
            cv.max_error[a] = std::max(cv.max_error[a], o.err[a]);
            for (std::size_t t = 0; t < o.l1[a].size(); ++t) l1_sum[a][t] += o.l1[a][t];
        }
        cv.lambda_gap = std::max(cv.lambda_gap, o.lambda_gap);
        cv.self_gap = std::max(cv.self_gap, o.self_gap);
    }

    cv.kg = kg_evaluate(spec, opts.T, opts.C, opts.resolutions, cv.gamma);
    const double log_den = log_denominator_bound(spec, opts.T, opts.C, cv.gamma);
    const double delta = spec.space.delta();
    for (std::size_t a = 0; a < nA; ++a) {
        if (cv.n_traj > 0) cv.mean_error[a] /= static_cast<double>(cv.n_traj);
        double emp = 0.0;
        for (double v : l1_sum[a]) emp = std::max(emp, cv.n_traj > 0 ? v / static_cast<double>(cv.n_traj) : 0.0);
        cv.empirical_l1.push_back(emp);
        const double l1 = cv.kg.sup_l1[a];
        cv.sup_l1.push_back(l1);
        cv.log_bound_v1.push_back(std::log(l1) + std::log1p(2.0 * delta * cv.kg.K_G_v1) - log_den);
        cv.log_bound_v2.push_back(std::log(l1) + std::log1p(2.0 * delta * cv.kg.K_G_v2) - log_den);
        // max error over every accepted run against the smaller of the two bounds
        if (cv.max_error[a] > 0 &&
            std::log(cv.max_error[a]) > std::min(cv.log_bound_v1[a], cv.log_bound_v2[a]))
            cv.bound_dominated = false;
    }
    if (!cv.reference_exact && opts.self_check && cv.n_traj > 0) {
        double smallest = *std::min_element(cv.mean_error.begin(), cv.mean_error.end());
        cv.self_consistent = cv.self_gap < 0.1 * smallest;
    }
    cv.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cv;
}

void write_curve_csv(std::ostream& os, const ConvergenceCurve& cv, const Metadata& config_echo) {
    Metadata m = config_echo;
    m.emplace_back("T", std::to_string(cv.T));
    m.emplace_back("C", format_double(cv.C));
    m.emplace_back("gamma", format_double(cv.gamma));
    m.emplace_back("reference", cv.reference_exact ? "exact" : "surrogate_A" + std::to_string(cv.A_ref));
    m.emplace_back("self_consistency_gap", format_double(cv.self_gap));
    m.emplace_back("self_consistent", cv.self_consistent ? "1" : "0");
    m.emplace_back("lambda_gap", format_double(cv.lambda_gap));
    m.emplace_back("bound_dominated", cv.bound_dominated ? "1" : "0");
    m.emplace_back("n_total", std::to_string(cv.n_total));
    m.emplace_back("n_aborted", std::to_string(cv.n_aborted));
    m.emplace_back("sup_over_omega", "max over sampled trajectories (estimate)");
    m.emplace_back("chain_law", "quantized_chain");
    write_metadata(os, m);
    for (const auto& d : cv.diagnostics) os << "# aborted: " << d << "\n";
    os << "A,mean_sup_error,max_sup_error,analytic_bound,n_traj,n_rejected,log_analytic_bound,sup_l1_bound,empirical_l1\n";
    for (std::size_t i = 0; i < cv.resolutions.size(); ++i) {
        os << cv.resolutions[i] << "," << format_double(cv.mean_error[i]) << "," << format_double(cv.max_error[i]) << ","
           << format_double(cv.analytic_bound(i)) << "," << cv.n_traj << "," << cv.n_rejected << ","
           << format_double(std::min(cv.log_bound_v1[i], cv.log_bound_v2[i])) << "," << format_double(cv.sup_l1[i])
           << "," << format_double(cv.empirical_l1[i]) << "\n";
    }
}

void write_kg_csv(std::ostream& os, const KGReport& kg, const Metadata& config_echo) {
    Metadata m = config_echo;
    m.emplace_back("T", std::to_string(kg.T));
    m.emplace_back("C", format_double(kg.C));
    m.emplace_back("N", std::to_string(kg.N));
    m.emplace_back("gamma", format_double(kg.gamma));
    m.emplace_back("gamma_tilde", format_double(kg.gamma_tilde));
    m.emplace_back("K_o", format_double(kg.K_o));
    m.emplace_back("K_INV", format_double(kg.K_INV));
    m.emplace_back("K_DET", format_double(kg.K_DET));
    m.emplace_back("K_sigma", format_double(kg.K_sigma));
    m.emplace_back("lambda_inf", format_double(kg.lambda_inf));
    m.emplace_back("K_G_v1", format_double(kg.K_G_v1));
    m.emplace_back("K_G_v2", format_double(kg.K_G_v2));
    write_metadata(os, m);
    os << "A,sup_l1,K_G_v1,K_G_v2,bound_v1,bound_v2\n";
    for (std::size_t i = 0; i < kg.resolutions.size(); ++i) {
        os << kg.resolutions[i] << "," << format_double(kg.sup_l1[i]) << "," << format_double(kg.K_G_v1) << ","
           << format_double(kg.K_G_v2) << "," << format_double(kg.bound_v1[i]) << "," << format_double(kg.bound_v2[i])
           << "\n";
    }
}

}  // namespace cmf
