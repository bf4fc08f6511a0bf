#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmfilter/rng.hpp"

namespace cmf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Box Z = [lower, upper] in R^M.
struct StateSpace {
    Vector lower;
    Vector upper;

    StateSpace() = default;
    StateSpace(Vector lo, Vector hi);

    int dim() const { return static_cast<int>(lower.size()); }
    // max over coordinates of max(|lower_i|, |upper_i|)
    double delta() const;
    bool contains(const Vector& x) const;
    double volume() const;
};

struct ObservationModel {
    int N = 1;
    std::function<Vector(int, const Vector&)> mean_fn;
    std::function<Matrix(int, const Vector&)> cov_fn;
    double sigma_xi_sq = 1.0;
    double obs_scale = 1.0;
    bool stationary = true;

    // Scaled quantities: obs_scale * mu and obs_scale^2 * (Sigma + sigma_xi^2 I).
    Vector mean(int t, const Vector& x) const;
    Matrix covariance(int t, const Vector& x) const;
    // obs_scale^2 * Sigma, without the noise floor.
    Matrix sigma(int t, const Vector& x) const;
};

struct TransitionKernel {
    // history holds x_{t-order..t-1}; the last element is x_{t-1}.
    std::function<Vector(int, std::span<const Vector>, Rng&)> sampler;
    std::function<double(int, const Vector&, const Vector&)> density;
    int order = 1;
    std::function<double(const Vector&)> initial_density;
    std::function<Vector(Rng&)> initial_sampler;
};

// True dynamics supported on the centers of a uniform grid.
struct FiniteStateLaw {
    std::vector<int> states_per_dim;
    Matrix transition;  // row-stochastic
    Vector initial;
};

struct AssumptionConstants {
    double lambda_inf = 0.0;
    double lambda_sup = 0.0;
    double mu_sup = 0.0;
    double K_mu = 0.0;
    double K_sigma = 0.0;

    bool operator==(const AssumptionConstants&) const = default;
};

struct SystemSpec {
    std::string id;
    StateSpace space;
    TransitionKernel kernel;
    ObservationModel obs;
    AssumptionConstants constants;
    int horizon = 0;
    std::optional<FiniteStateLaw> finite_law;

    int M() const { return space.dim(); }
    int N() const { return obs.N; }
};

struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> observations;
    std::uint64_t seed = 0;

    int T() const { return static_cast<int>(states.size()) - 1; }
};

// Fails with ModelError unless constants and box are usable.
void validate(const SystemSpec& spec);

Trajectory simulate(const SystemSpec& spec, int T, std::uint64_t seed);

// Same state path as simulate(spec, T, seed); observations are i.i.d. N(0, I).
Trajectory simulate_tilde(const SystemSpec& spec, int T, std::uint64_t seed);

// State path only; shared by both measures.
std::vector<Vector> simulate_states(const SystemSpec& spec, int T, std::uint64_t seed);

AssumptionConstants verify_assumptions(const SystemSpec& spec, int n_probe, std::uint64_t seed);

std::string format_point(const Vector& x);

}  // namespace cmf
