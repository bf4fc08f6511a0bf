#include "cmfilter/filter.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "cmfilter/errors.hpp"

namespace cmf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector weighted_center(const Grid& grid, const Vector& prob) {
    Vector est = Vector::Zero(grid.dim());
    for (int l = 0; l < grid.total_points(); ++l)
        if (prob[l] > 0) est += prob[l] * grid.center(l);
    return est;
}

}  // namespace

FilterState grid_filter_step(const QuantizedChain& chain, const EmissionTable& table,
                             const FilterState& state, const Vector& y, LikelihoodForm form) {
    const int K = chain.grid.total_points();
    Vector prior;
    if (state.t < 0) {
        prior = chain.initial;
    } else {
        Vector p = state.log_weights.array().exp();
        prior = chain.transition.transpose() * p;
    }
    const int t = state.t + 1;
    Vector ll = table.log_terms(t, y, form);
    Vector lw(K);
    double m = kNegInf;
    for (int l = 0; l < K; ++l) {
        lw[l] = prior[l] > 0 ? std::log(prior[l]) + ll[l] : kNegInf;
        if (lw[l] > m) m = lw[l];
    }
    if (!std::isfinite(m))
        throw DegenerateUpdateError("all posterior weights vanished at t=" + std::to_string(t) +
                                        " (max log-likelihood " + std::to_string(ll.maxCoeff()) + ")",
                                    ll.maxCoeff());
    double s = 0.0;
    for (int l = 0; l < K; ++l)
        if (lw[l] > kNegInf) s += std::exp(lw[l] - m);
    const double lse = m + std::log(s);

    FilterState out;
    out.t = t;
    out.log_weights = lw.array() - lse;
    out.log_norm = state.log_norm + lse;
    out.estimate = weighted_center(chain.grid, out.log_weights.array().exp());
    return out;
}

FilterState grid_filter_step(const QuantizedChain& chain, const SystemSpec& spec,
                             const FilterState& state, const Vector& y, LikelihoodForm form) {
    EmissionTable table(spec, chain.grid);
    return grid_filter_step(chain, table, state, y, form);
}

FilterRunResult run_grid_filter(const SystemSpec& spec, const QuantizedChain& chain,
                                const std::vector<Vector>& observations, LikelihoodForm form) {
    auto start = std::chrono::steady_clock::now();
    FilterRunResult res;
    res.A = chain.grid.total_points();
    if (observations.empty()) return res;
    EmissionTable table(spec, chain.grid);
    FilterState st;
    for (const auto& y : observations) {
        if (y.size() != spec.N())
            throw DomainError("observation has dimension " + std::to_string(y.size()) + ", expected " +
                              std::to_string(spec.N()));
        st = grid_filter_step(chain, table, st, y, form);
        res.estimates.push_back(st.estimate);
        res.log_norms.push_back(st.log_norm);
    }
    res.wall_time = std::chrono::steady_clock::now() - start;
    return res;
}

std::vector<Vector> path_sum_oracle(const SystemSpec& spec, const QuantizedChain& chain,
                                    const std::vector<Vector>& observations) {
    const int K = chain.grid.total_points();
    const int T = static_cast<int>(observations.size()) - 1;
    if (T < 0) return {};
    const double budget = std::pow(static_cast<double>(K), T + 1);
    if (T > 6 || budget > 1e6)
        throw BudgetExceeded("path enumeration over T=" + std::to_string(T) + " needs " + format_double(budget) +
                                 " paths (limit 1e6 paths, T <= 6)",
                             budget);

    // ell[i][l]: per-step normalized log likelihood at center l
    std::vector<std::vector<double>> ell(static_cast<std::size_t>(T) + 1, std::vector<double>(static_cast<std::size_t>(K)));
    for (int i = 0; i <= T; ++i)
        for (int l = 0; l < K; ++l)
            ell[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] =
                log_lambda_hat(spec, i, chain.grid.center(l), observations[static_cast<std::size_t>(i)]);

    std::vector<Vector> out;
    std::vector<int> path;
    for (int t = 0; t <= T; ++t) {
        const long long n_paths = static_cast<long long>(std::llround(std::pow(K, t + 1)));
        std::vector<double> logw(static_cast<std::size_t>(n_paths));
        std::vector<int> last(static_cast<std::size_t>(n_paths));
        double m = kNegInf;
        path.assign(static_cast<std::size_t>(t) + 1, 0);
        for (long long p = 0; p < n_paths; ++p) {
            long long rem = p;
            for (int i = t; i >= 0; --i) {
                path[static_cast<std::size_t>(i)] = static_cast<int>(rem % K);
                rem /= K;
            }
            double w = std::log(chain.initial[path[0]]) + ell[0][static_cast<std::size_t>(path[0])];
            for (int i = 1; i <= t; ++i)
                w += std::log(chain.transition(path[static_cast<std::size_t>(i) - 1], path[static_cast<std::size_t>(i)])) +
                     ell[static_cast<std::size_t>(i)][static_cast<std::size_t>(path[static_cast<std::size_t>(i)])];
            logw[static_cast<std::size_t>(p)] = w;
            last[static_cast<std::size_t>(p)] = path[static_cast<std::size_t>(t)];
            if (w > m) m = w;
        }
        if (!std::isfinite(m)) throw DegenerateUpdateError("every path has zero weight", m);
        double den = 0.0;
        Vector num = Vector::Zero(chain.grid.dim());
        for (long long p = 0; p < n_paths; ++p) {
            double w = std::exp(logw[static_cast<std::size_t>(p)] - m);
            den += w;
            num += w * chain.grid.center(last[static_cast<std::size_t>(p)]);
        }
        out.push_back(num / den);
    }
    return out;
}

std::vector<Vector> exact_forward_filter(const SystemSpec& spec, const std::vector<Vector>& observations) {
    if (!spec.finite_law) throw DomainError("exact forward filter needs a finite-state law");
    const FiniteStateLaw& law = *spec.finite_law;
    Grid grid(spec.space, law.states_per_dim);
    const int K = grid.total_points();
    const int N = spec.N();
    const double log_2pi = std::log(2.0 * M_PI);

    std::vector<Vector> out;
    Vector alpha;
    for (std::size_t t = 0; t < observations.size(); ++t) {
        const Vector& y = observations[t];
        Vector pred = t == 0 ? Vector(law.initial / law.initial.sum()) : Vector(law.transition.transpose() * alpha);
        Vector dens(K);
        for (int l = 0; l < K; ++l) {
            const Vector& x = grid.center(l);
            Matrix C = spec.obs.covariance(static_cast<int>(t), x);
            Vector r = y - spec.obs.mean(static_cast<int>(t), x);
            double q = r.dot(C.inverse() * r);
            dens[l] = std::exp(-0.5 * q - 0.5 * N * log_2pi) / std::sqrt(C.determinant());
        }
        alpha = pred.cwiseProduct(dens);
        double s = alpha.sum();
        if (!(s > 0) || !std::isfinite(s))
            throw DegenerateUpdateError("forward recursion lost all mass at t=" + std::to_string(t), s);
        alpha /= s;
        out.push_back(weighted_center(grid, alpha));
    }
    return out;
}

void write_filter_csv(std::ostream& os, const FilterRunResult& res, const Metadata& meta) {
    write_metadata(os, meta);
    const int M = res.estimates.empty() ? 0 : static_cast<int>(res.estimates[0].size());
    os << "t";
    for (int i = 0; i < M; ++i) os << ",estimate_" << i;
    os << ",log_norm\n";
    for (std::size_t t = 0; t < res.estimates.size(); ++t) {
        os << t;
        for (int i = 0; i < M; ++i) os << "," << format_double(res.estimates[t][i]);
        os << "," << format_double(res.log_norms[t]) << "\n";
    }
}

}  // namespace cmf
