#pragma once

#include <chrono>
#include <iosfwd>
#include <vector>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/likelihood.hpp"
#include "cmfilter/quantize.hpp"

namespace cmf {

struct FilterState {
    int t = -1;          // -1: before the first observation
    Vector log_weights;  // normalized: logsumexp == 0
    Vector estimate;
    double log_norm = 0.0;  // running log of the normalizing denominator
};

struct FilterRunResult {
    std::vector<Vector> estimates;
    std::vector<double> log_norms;
    std::chrono::duration<double> wall_time{0};
    int A = 0;  // total grid points
};

FilterState grid_filter_step(const QuantizedChain& chain, const EmissionTable& table,
                             const FilterState& state, const Vector& y,
                             LikelihoodForm form = LikelihoodForm::kNormalized);

FilterState grid_filter_step(const QuantizedChain& chain, const SystemSpec& spec,
                             const FilterState& state, const Vector& y,
                             LikelihoodForm form = LikelihoodForm::kNormalized);

FilterRunResult run_grid_filter(const SystemSpec& spec, const QuantizedChain& chain,
                                const std::vector<Vector>& observations,
                                LikelihoodForm form = LikelihoodForm::kNormalized);

// Enumerates every grid path; refuses when T > 6 or K^(T+1) > 1e6.
std::vector<Vector> path_sum_oracle(const SystemSpec& spec, const QuantizedChain& chain,
                                    const std::vector<Vector>& observations);

// Forward algorithm under P with full Gaussian emission densities; requires spec.finite_law.
std::vector<Vector> exact_forward_filter(const SystemSpec& spec, const std::vector<Vector>& observations);

void write_filter_csv(std::ostream& os, const FilterRunResult& res, const Metadata& meta);

}  // namespace cmf
