#include "cmfilter/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/parallel.hpp"
#include "cmfilter/rng.hpp"

namespace cmf {

Chi2TailResult chi2_tail_check(int N, double u, long n_samples, std::uint64_t seed) {
    if (!(u > 0)) throw DomainError("chi-squared tail needs u > 0");
    if (N < 1 || n_samples < 1) throw DomainError("chi-squared tail needs N >= 1 and samples");
    Chi2TailResult r;
    r.N = N;
    r.u = u;
    r.level = N + 2.0 * std::sqrt(N * u) + 2.0 * u;
    r.n_samples = n_samples;
    r.bound = std::exp(-u);
    r.sigma = std::sqrt(r.bound * (1.0 - r.bound) / static_cast<double>(n_samples));
    Rng rng(seed, kTrialStream, static_cast<std::uint64_t>(N));
    long hits = 0;
    for (long k = 0; k < n_samples; ++k) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) {
            double z = rng.normal();
            s += z * z;
        }
        if (s >= r.level) ++hits;
    }
    r.empirical = static_cast<double>(hits) / static_cast<double>(n_samples);
    return r;
}

double omega_threshold(double gamma, double C, int N, int T) {
    return gamma * C * N * (1.0 + std::log(static_cast<double>(T) + 1.0));
}

double omega_probability_bound(double C, int N, int T) {
    const double cn = C * N;
    return 1.0 - std::pow(static_cast<double>(T) + 1.0, 1.0 - cn) * std::exp(-cn);
}

bool omega_hat_membership(const Trajectory& traj, double C, double gamma) {
    const int N = traj.observations.empty() ? 0 : static_cast<int>(traj.observations[0].size());
    const double thr = omega_threshold(gamma, C, N, traj.T());
    for (const auto& y : traj.observations)
        if (!(y.squaredNorm() < thr)) return false;
    return true;
}

double gamma_p(const AssumptionConstants& c) {
    return 5.0 * c.lambda_sup * (1.0 + c.mu_sup) * (1.0 + c.mu_sup);
}

double gamma_filter(const AssumptionConstants& c) { return std::max(gamma_p(c), 5.0); }

bool ConcentrationReport::pass() const {
    return empirical_p >= bound - 3.0 * sigma && empirical_tilde >= bound - 3.0 * sigma;
}

ConcentrationReport concentration_experiment(const SystemSpec& spec, int T, double C, long n_trajectories,
                                             std::uint64_t seed, int workers,
                                             std::optional<double> gamma_override) {
    if (!(C >= 1.0)) throw DomainError("concentration experiment needs C >= 1");
    if (T < 0 || n_trajectories < 1) throw DomainError("concentration experiment needs T >= 0 and trajectories");
    ConcentrationReport r;
    r.C = C;
    r.N = spec.N();
    r.T = T;
    r.gamma_p = gamma_override ? *gamma_override : gamma_p(spec.constants);
    r.gamma_tilde = gamma_override ? *gamma_override : 5.0;
    r.threshold_p = omega_threshold(r.gamma_p, C, r.N, T);
    r.threshold_tilde = omega_threshold(r.gamma_tilde, C, r.N, T);
    r.n_trajectories = n_trajectories;
    r.bound = omega_probability_bound(C, r.N, T);
    r.sigma = std::sqrt(std::max(0.0, r.bound * (1.0 - r.bound)) / static_cast<double>(n_trajectories));

    std::vector<char> in_p(static_cast<std::size_t>(n_trajectories)), in_t(static_cast<std::size_t>(n_trajectories));
    parallel_for(n_trajectories, workers, [&](long i) {
        const std::uint64_t s = splitmix64(seed + static_cast<std::uint64_t>(i));
        in_p[static_cast<std::size_t>(i)] = omega_hat_membership(simulate(spec, T, s), C, r.gamma_p);
        in_t[static_cast<std::size_t>(i)] = omega_hat_membership(simulate_tilde(spec, T, s), C, r.gamma_tilde);
    });
    long np = 0, nt = 0;
    for (long i = 0; i < n_trajectories; ++i) {
        np += in_p[static_cast<std::size_t>(i)];
        nt += in_t[static_cast<std::size_t>(i)];
    }
    r.empirical_p = static_cast<double>(np) / static_cast<double>(n_trajectories);
    r.empirical_tilde = static_cast<double>(nt) / static_cast<double>(n_trajectories);
    return r;
}

void write_concentration_csv(std::ostream& os, const std::vector<ConcentrationReport>& reports) {
    os << "N,C,T,gamma_p,gamma_tilde,threshold_p,threshold_tilde,n_trajectories,empirical_p,empirical_tilde,bound,sigma,pass\n";
    for (const auto& r : reports) {
        os << r.N << "," << format_double(r.C) << "," << r.T << "," << format_double(r.gamma_p) << ","
           << format_double(r.gamma_tilde) << "," << format_double(r.threshold_p) << ","
           << format_double(r.threshold_tilde) << "," << r.n_trajectories << "," << format_double(r.empirical_p)
           << "," << format_double(r.empirical_tilde) << "," << format_double(r.bound) << ","
           << format_double(r.sigma) << "," << (r.pass() ? 1 : 0) << "\n";
    }
}

void write_chi2_csv(std::ostream& os, const std::vector<Chi2TailResult>& tails) {
    os << "N,u,level,n_samples,empirical,bound,sigma,pass\n";
    for (const auto& t : tails) {
        os << t.N << "," << format_double(t.u) << "," << format_double(t.level) << "," << t.n_samples << ","
           << format_double(t.empirical) << "," << format_double(t.bound) << "," << format_double(t.sigma) << ","
           << (t.pass() ? 1 : 0) << "\n";
    }
}

}  // namespace cmf
