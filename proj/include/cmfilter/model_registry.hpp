#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmfilter/model.hpp"

namespace cmf {

// Parameters of the built-in model families.
//
// kernel:      random_walk | uniform | identity | finite_chain
// observation: linear_quadratic | constant | factor
//
// linear_quadratic: mu_j(x) = alpha * x_{j mod M}, Sigma(x) = (beta + |x|^2) I
// constant:         mu_j(x) = alpha,               Sigma(x) = beta I
// factor:           mu_j(x) = alpha * x_{j mod M}, Sigma(x) = B(x) B(x)^T,
//                   B(x) = factor_scale * (B_0 + sum_i x_i B_i), B_i seeded by factor_seed
struct ModelParams {
    std::string id = "model";
    std::string kernel = "random_walk";
    std::string observation = "linear_quadratic";
    int M = 1;
    int N = 1;
    std::vector<double> lower{0.0};
    std::vector<double> upper{1.0};
    double step_sd = 0.1;
    double alpha = 1.0;
    double beta = 1.0;
    double sigma_xi_sq = 1.0;
    double obs_scale = 1.0;
    int states_per_dim = 2;
    double stay = 0.5;
    std::uint64_t chain_seed = 1;
    std::uint64_t factor_seed = 1;
    double factor_scale = 0.5;
    int horizon = 20;

    bool operator==(const ModelParams&) const = default;
};

// Builds a system with analytically derived (rigorous) assumption constants,
// replaced by `declared` when given.
SystemSpec make_system(const ModelParams& p,
                       const std::optional<AssumptionConstants>& declared = std::nullopt);

AssumptionConstants analytic_constants(const ModelParams& p);

}  // namespace cmf
