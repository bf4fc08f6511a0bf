#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/filter.hpp"
#include "cmfilter/quantize.hpp"

namespace cmf {

// Exact forward filter when the system carries a finite-state law, otherwise a
// grid filter at A_ref (per coordinate), which must be at least 8x max_A;
// A_ref = 0 selects exactly 8x max_A.
class ReferenceFilter {
public:
    ReferenceFilter(const SystemSpec& spec, int max_A, int A_ref, std::uint64_t seed, int mc_samples = 20000);

    std::vector<Vector> operator()(const std::vector<Vector>& observations) const;
    bool exact() const { return exact_; }
    int A_ref() const { return A_ref_; }
    std::string label() const;

private:
    const SystemSpec* spec_;
    bool exact_ = false;
    int A_ref_ = 0;
    std::optional<QuantizedChain> chain_;
};

std::vector<Vector> reference_filter(const SystemSpec& spec, const std::vector<Vector>& observations,
                                     int max_A, int A_ref, std::uint64_t seed = 0);

struct KGReport {
    int T = 0;
    double C = 1.0;
    int N = 0;
    double gamma = 0.0;
    double gamma_tilde = 0.0;  // sqrt(gamma) + mu_sup
    double K_o = 0.0;
    double K_INV = 0.0;
    double K_DET = 0.0;
    double K_sigma = 0.0;
    double lambda_inf = 0.0;
    double K_G_v1 = 0.0;  // grows like T log T
    double K_G_v2 = 0.0;  // grows like log T
    std::vector<int> resolutions;
    std::vector<double> sup_l1;     // half-cell ell_1 bound per A
    std::vector<double> bound_v1;   // K_G_v1 * sup_l1
    std::vector<double> bound_v2;
};

KGReport kg_evaluate(const SystemSpec& spec, int T, double C, const std::vector<int>& resolutions = {},
                     std::optional<double> gamma = std::nullopt);

// ell_1 bound on |x - Q_A(x)|: sum of half cell widths.
double half_cell_l1(const StateSpace& space, int A);

// log of the lower bound on the approximate filter's normalizing denominator over Omega_hat_T.
double log_denominator_bound(const SystemSpec& spec, int T, double C, double gamma);

struct SweepOptions {
    int T = 20;
    std::vector<int> resolutions;
    long n_traj = 20;
    double C = 1.0;
    std::uint64_t seed = 1;
    int A_ref = 0;  // 0: 8x the largest resolution
    bool self_check = true;
    int workers = 1;
    int mc_samples = 20000;
    std::optional<double> gamma;
};

struct ConvergenceCurve {
    std::vector<int> resolutions;
    std::vector<double> mean_error;
    std::vector<double> max_error;
    std::vector<double> log_bound_v1;  // log of the final error bound per A
    std::vector<double> log_bound_v2;
    std::vector<double> sup_l1;
    std::vector<double> empirical_l1;
    long n_traj = 0;  // accepted and completed
    long n_rejected = 0;
    long n_aborted = 0;
    long n_total = 0;
    int T = 0;
    double C = 1.0;
    double gamma = 0.0;
    bool reference_exact = false;
    int A_ref = 0;
    double self_gap = 0.0;       // max over trajectories of sup_t |ref(A_ref) - ref(2 A_ref)|_1
    bool self_consistent = true;
    double lambda_gap = 0.0;     // max |estimate(lambda) - estimate(lambda_hat)|
    bool bound_dominated = true;
    double wall_seconds = 0.0;
    std::vector<std::string> diagnostics;
    KGReport kg;

    double analytic_bound(std::size_t i) const;  // may overflow to inf
};

ConvergenceCurve convergence_sweep(const SystemSpec& spec, const SweepOptions& opts);

void write_curve_csv(std::ostream& os, const ConvergenceCurve& curve, const Metadata& config_echo);
void write_kg_csv(std::ostream& os, const KGReport& kg, const Metadata& config_echo);

}  // namespace cmf
