#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmfilter/model.hpp"
#include "cmfilter/model_registry.hpp"

namespace cmf::testing {

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Asymptotic two-sample critical value at level 1%.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return 1.628 * std::sqrt((nn + mm) / (nn * mm));
}

// One-sample KS against the standard normal CDF.
inline double ks_normal(std::vector<double> a) {
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double F = 0.5 * std::erfc(-a[i] / std::sqrt(2.0));
        d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
    }
    return d;
}

// Scalar Gaussian density with explicit normalization.
inline double gauss_pdf(double y, double mu, double var) {
    return std::exp(-0.5 * (y - mu) * (y - mu) / var) / std::sqrt(2.0 * M_PI * var);
}

// Multivariate Gaussian density via dense inverse and determinant.
inline double mvn_pdf(const Vector& y, const Vector& mu, const Matrix& C) {
    Vector d = y - mu;
    double q = d.dot(C.inverse() * d);
    return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * M_PI, static_cast<double>(y.size())) * C.determinant());
}

// Finite chain observed through linear_quadratic with the given size.
inline ModelParams finite_params(int K, int N, std::uint64_t chain_seed, int horizon = 50) {
    ModelParams p;
    p.id = "finite";
    p.kernel = "finite_chain";
    p.observation = "linear_quadratic";
    p.M = 1;
    p.N = N;
    p.lower = {0.0};
    p.upper = {1.0};
    p.states_per_dim = K;
    p.stay = 0.6;
    p.alpha = 2.0;
    p.beta = 0.5;
    p.sigma_xi_sq = 1.0;
    p.chain_seed = chain_seed;
    p.horizon = horizon;
    return p;
}

inline ModelParams random_walk_params(int N = 2, int horizon = 20) {
    ModelParams p;
    p.id = "random_walk";
    p.kernel = "random_walk";
    p.observation = "linear_quadratic";
    p.M = 1;
    p.N = N;
    p.lower = {0.0};
    p.upper = {1.0};
    p.step_sd = 0.1;
    p.alpha = 2.0;
    p.beta = 0.5;
    p.sigma_xi_sq = 1.0;
    p.horizon = horizon;
    return p;
}

}  // namespace cmf::testing
