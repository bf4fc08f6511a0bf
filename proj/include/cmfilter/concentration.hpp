#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cmfilter/model.hpp"

namespace cmf {

struct Chi2TailResult {
    int N = 0;
    double u = 0.0;
    double level = 0.0;  // N + 2 sqrt(N u) + 2u
    long n_samples = 0;
    double empirical = 0.0;
    double bound = 0.0;  // exp(-u)
    double sigma = 0.0;  // binomial standard error at the bound
    bool pass() const { return empirical <= bound + 3.0 * sigma; }
};

Chi2TailResult chi2_tail_check(int N, double u, long n_samples, std::uint64_t seed);

// gamma C N (1 + log(T + 1))
double omega_threshold(double gamma, double C, int N, int T);
// 1 - (T + 1)^(1 - C N) exp(-C N)
double omega_probability_bound(double C, int N, int T);

// max_t |y_t|^2 < threshold (strict).
bool omega_hat_membership(const Trajectory& traj, double C, double gamma);

// 5 lambda_sup (1 + mu_sup)^2
double gamma_p(const AssumptionConstants& c);
// max(gamma_p, 5): the event used for the filter bound
double gamma_filter(const AssumptionConstants& c);

struct ConcentrationReport {
    double C = 1.0;
    int N = 0;
    int T = 0;
    double gamma_p = 0.0;
    double gamma_tilde = 5.0;
    double threshold_p = 0.0;
    double threshold_tilde = 0.0;
    long n_trajectories = 0;
    double empirical_p = 0.0;
    double empirical_tilde = 0.0;
    double bound = 0.0;
    double sigma = 0.0;
    bool pass() const;
};

ConcentrationReport concentration_experiment(const SystemSpec& spec, int T, double C, long n_trajectories,
                                             std::uint64_t seed, int workers = 1,
                                             std::optional<double> gamma_override = std::nullopt);

void write_concentration_csv(std::ostream& os, const std::vector<ConcentrationReport>& reports);
void write_chi2_csv(std::ostream& os, const std::vector<Chi2TailResult>& tails);

}  // namespace cmf
