#include "cmfilter/model_registry.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

#include "cmfilter/errors.hpp"
#include "cmfilter/quantize.hpp"

namespace cmf {

namespace {

struct Factors {
    Matrix B0;
    std::vector<Matrix> B;  // one per state coordinate
};

Factors make_factors(const ModelParams& p) {
    Rng rng(p.factor_seed, kTrialStream);
    Factors f;
    f.B0 = Matrix(p.N, p.N);
    for (int i = 0; i < p.N; ++i)
        for (int j = 0; j < p.N; ++j) f.B0(i, j) = rng.normal();
    for (int c = 0; c < p.M; ++c) {
        Matrix b(p.N, p.N);
        for (int i = 0; i < p.N; ++i)
            for (int j = 0; j < p.N; ++j) b(i, j) = rng.normal();
        f.B.push_back(std::move(b));
    }
    return f;
}

std::vector<double> coord_delta(const ModelParams& p) {
    std::vector<double> d(static_cast<std::size_t>(p.M));
    for (int i = 0; i < p.M; ++i)
        d[static_cast<std::size_t>(i)] = std::max(std::abs(p.lower[static_cast<std::size_t>(i)]),
                                                   std::abs(p.upper[static_cast<std::size_t>(i)]));
    return d;
}

// min over the box of x_i^2
double coord_min_sq(double lo, double hi) {
    if (lo <= 0.0 && hi >= 0.0) return 0.0;
    return std::min(lo * lo, hi * hi);
}

void check_params(const ModelParams& p) {
    if (p.M < 1 || p.N < 1) throw ModelError("M and N must be positive");
    if (static_cast<int>(p.lower.size()) != p.M || static_cast<int>(p.upper.size()) != p.M)
        throw ModelError("lower/upper must have M entries");
    if (!(p.sigma_xi_sq > 0) || !(p.obs_scale > 0)) throw ModelError("sigma_xi_sq and obs_scale must be positive");
    if (p.observation == "linear_quadratic" || p.observation == "constant") {
        if (p.beta < 0) throw ModelError("beta must be nonnegative");
    } else if (p.observation != "factor") {
        throw ModelError("unknown observation family '" + p.observation + "'");
    }
    if (p.kernel == "random_walk") {
        if (!(p.step_sd > 0)) throw ModelError("step_sd must be positive");
    } else if (p.kernel == "finite_chain") {
        if (p.states_per_dim < 1) throw ModelError("states_per_dim must be positive");
        if (p.stay < 0 || p.stay > 1) throw ModelError("stay must lie in [0, 1]");
    } else if (p.kernel != "uniform" && p.kernel != "identity") {
        throw ModelError("unknown kernel family '" + p.kernel + "'");
    }
}

Vector linear_mean(const ModelParams& p, const Vector& x) {
    Vector mu(p.N);
    for (int j = 0; j < p.N; ++j) mu[j] = p.alpha * x[j % p.M];
    return mu;
}

}  // namespace

AssumptionConstants analytic_constants(const ModelParams& p) {
    check_params(p);
    const double s2 = p.obs_scale * p.obs_scale;
    const auto d = coord_delta(p);
    AssumptionConstants c;
    if (p.observation == "constant") {
        c.lambda_inf = c.lambda_sup = s2 * (p.beta + p.sigma_xi_sq);
        c.mu_sup = p.obs_scale * std::abs(p.alpha) * std::sqrt(static_cast<double>(p.N));
        return c;
    }
    double mu_sq = 0.0;
    int max_count = 0;
    for (int i = 0; i < p.M; ++i) {
        int count = 0;
        for (int j = 0; j < p.N; ++j)
            if (j % p.M == i) ++count;
        max_count = std::max(max_count, count);
        mu_sq += count * d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
    }
    c.mu_sup = p.obs_scale * std::abs(p.alpha) * std::sqrt(mu_sq);
    c.K_mu = p.obs_scale * std::abs(p.alpha) * std::sqrt(static_cast<double>(max_count));

    if (p.observation == "linear_quadratic") {
        double min_sq = 0.0, max_sq = 0.0;
        for (int i = 0; i < p.M; ++i) {
            min_sq += coord_min_sq(p.lower[static_cast<std::size_t>(i)], p.upper[static_cast<std::size_t>(i)]);
            max_sq += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
        }
        c.lambda_inf = s2 * (p.beta + p.sigma_xi_sq + min_sq);
        c.lambda_sup = s2 * (p.beta + p.sigma_xi_sq + max_sq);
        double dmax = *std::max_element(d.begin(), d.end());
        c.K_sigma = s2 * 2.0 * dmax;
        return c;
    }

    // factor: row-norm bounds of B(x) over the box
    Factors f = make_factors(p);
    double r_sq = 0.0, r_max = 0.0, bi_max = 0.0;
    for (int k = 0; k < p.N; ++k) {
        double r = f.B0.row(k).norm();
        for (int i = 0; i < p.M; ++i) {
            r += d[static_cast<std::size_t>(i)] * f.B[static_cast<std::size_t>(i)].row(k).norm();
            bi_max = std::max(bi_max, f.B[static_cast<std::size_t>(i)].row(k).norm());
        }
        r *= p.factor_scale;
        r_sq += r * r;
        r_max = std::max(r_max, r);
    }
    c.lambda_inf = s2 * p.sigma_xi_sq;
    c.lambda_sup = s2 * (p.sigma_xi_sq + r_sq);
    c.K_sigma = s2 * 2.0 * p.factor_scale * bi_max * r_max;
    return c;
}

SystemSpec make_system(const ModelParams& p, const std::optional<AssumptionConstants>& declared) {
    check_params(p);
    SystemSpec spec;
    spec.id = p.id;
    Vector lo = Eigen::Map<const Vector>(p.lower.data(), p.M);
    Vector hi = Eigen::Map<const Vector>(p.upper.data(), p.M);
    spec.space = StateSpace(lo, hi);
    spec.horizon = p.horizon;
    const StateSpace space = spec.space;
    const double vol = space.volume();

    // observation model
    spec.obs.N = p.N;
    spec.obs.sigma_xi_sq = p.sigma_xi_sq;
    spec.obs.obs_scale = p.obs_scale;
    spec.obs.stationary = true;
    if (p.observation == "linear_quadratic") {
        spec.obs.mean_fn = [p](int, const Vector& x) { return linear_mean(p, x); };
        spec.obs.cov_fn = [p](int, const Vector& x) {
            return Matrix(Matrix::Identity(p.N, p.N) * (p.beta + x.squaredNorm()));
        };
    } else if (p.observation == "constant") {
        spec.obs.mean_fn = [p](int, const Vector&) { return Vector(Vector::Constant(p.N, p.alpha)); };
        spec.obs.cov_fn = [p](int, const Vector&) { return Matrix(Matrix::Identity(p.N, p.N) * p.beta); };
    } else {
        auto f = std::make_shared<const Factors>(make_factors(p));
        spec.obs.mean_fn = [p](int, const Vector& x) { return linear_mean(p, x); };
        spec.obs.cov_fn = [p, f](int, const Vector& x) {
            Matrix b = f->B0;
            for (int i = 0; i < p.M; ++i) b += x[i] * f->B[static_cast<std::size_t>(i)];
            b *= p.factor_scale;
            Matrix s = b * b.transpose();
            return Matrix(0.5 * (s + s.transpose()));
        };
    }

    // kernel
    auto uniform_point = [space](Rng& rng) {
        Vector x(space.dim());
        for (int i = 0; i < space.dim(); ++i) x[i] = rng.uniform(space.lower[i], space.upper[i]);
        return x;
    };
    if (p.kernel == "random_walk") {
        const double sd = p.step_sd;
        spec.kernel.initial_sampler = uniform_point;
        spec.kernel.initial_density = [space, vol](const Vector& x) { return space.contains(x) ? 1.0 / vol : 0.0; };
        spec.kernel.sampler = [space, sd](int, std::span<const Vector> hist, Rng& rng) {
            const Vector& prev = hist.back();
            boost::math::normal_distribution<double> nd;
            Vector x(space.dim());
            for (int i = 0; i < space.dim(); ++i) {
                double a = boost::math::cdf(nd, (space.lower[i] - prev[i]) / sd);
                double b = boost::math::cdf(nd, (space.upper[i] - prev[i]) / sd);
                double u = a + (b - a) * rng.uniform();
                u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
                x[i] = std::clamp(prev[i] + sd * boost::math::quantile(nd, u), space.lower[i], space.upper[i]);
            }
            return x;
        };
        spec.kernel.density = [space, sd](int, const Vector& prev, const Vector& next) {
            if (!space.contains(next)) return 0.0;
            // the normaliser depends on prev only; rows are evaluated with a fixed prev
            thread_local Vector last_prev;
            thread_local double last_log_z = 0.0;
            thread_local double last_sd = -1.0;
            if (last_sd != sd || last_prev.size() != prev.size() || last_prev != prev) {
                double lz = 0.0;
                for (int i = 0; i < space.dim(); ++i) {
                    double z = 0.5 * (std::erfc(-(space.upper[i] - prev[i]) / (sd * std::sqrt(2.0))) -
                                      std::erfc(-(space.lower[i] - prev[i]) / (sd * std::sqrt(2.0))));
                    lz += std::log(z * sd * std::sqrt(2.0 * M_PI));
                }
                last_prev = prev;
                last_log_z = lz;
                last_sd = sd;
            }
            double q = (next - prev).squaredNorm() / (sd * sd);
            return std::exp(-0.5 * q - last_log_z);
        };
    } else if (p.kernel == "uniform") {
        spec.kernel.initial_sampler = uniform_point;
        spec.kernel.initial_density = [space, vol](const Vector& x) { return space.contains(x) ? 1.0 / vol : 0.0; };
        spec.kernel.sampler = [uniform_point](int, std::span<const Vector>, Rng& rng) { return uniform_point(rng); };
        spec.kernel.density = [space, vol](int, const Vector&, const Vector& next) {
            return space.contains(next) ? 1.0 / vol : 0.0;
        };
    } else if (p.kernel == "identity") {
        spec.kernel.initial_sampler = uniform_point;
        spec.kernel.initial_density = [space, vol](const Vector& x) { return space.contains(x) ? 1.0 / vol : 0.0; };
        spec.kernel.sampler = [](int, std::span<const Vector> hist, Rng&) { return hist.back(); };
    } else {
        Grid g(space, p.states_per_dim);
        const int K = g.total_points();
        FiniteStateLaw law;
        law.states_per_dim = g.A_per_dim();
        Rng rng(p.chain_seed, kChainStream);
        Matrix R(K, K);
        for (int k = 0; k < K; ++k) {
            for (int l = 0; l < K; ++l) R(k, l) = rng.uniform() + 1e-3;
            R.row(k) /= R.row(k).sum();
        }
        law.transition = p.stay * Matrix::Identity(K, K) + (1.0 - p.stay) * R;
        law.initial = Vector::Constant(K, 1.0 / K);
        spec.finite_law = law;
        auto shared = std::make_shared<const std::pair<Grid, Matrix>>(g, law.transition);
        spec.kernel.initial_sampler = [shared, K](Rng& r) {
            int l = std::min(K - 1, static_cast<int>(r.uniform() * K));
            return shared->first.center(l);
        };
        spec.kernel.sampler = [shared, K](int, std::span<const Vector> hist, Rng& r) {
            int k = shared->first.index(hist.back());
            double u = r.uniform(), acc = 0.0;
            int l = K - 1;
            for (int j = 0; j < K; ++j) {
                acc += shared->second(k, j);
                if (u < acc) {
                    l = j;
                    break;
                }
            }
            return shared->first.center(l);
        };
    }

    spec.constants = declared ? *declared : analytic_constants(p);
    validate(spec);
    return spec;
}

}  // namespace cmf
