#include "cmfilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cmfilter/errors.hpp"

namespace cmf {

AssumptionViolation::AssumptionViolation(std::string constant, std::string probe, double measured,
                                         double declared)
    : Error("assumption violated: " + constant + " measured " + std::to_string(measured) +
            " vs declared " + std::to_string(declared) + " at " + probe),
      constant_(std::move(constant)),
      probe_(std::move(probe)),
      measured_(measured),
      declared_(declared) {}

std::string format_point(const Vector& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i];
    }
    os << ")";
    return os.str();
}

StateSpace::StateSpace(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() < 1 || lower.size() != upper.size())
        throw ModelError("state space bounds must be nonempty and of equal length");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
            throw ModelError("state space requires finite lower < upper in coordinate " +
                             std::to_string(i));
    }
}

double StateSpace::delta() const {
    return std::max(lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff());
}

bool StateSpace::contains(const Vector& x) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    return true;
}

double StateSpace::volume() const { return (upper - lower).prod(); }

Vector ObservationModel::mean(int t, const Vector& x) const { return obs_scale * mean_fn(t, x); }

Matrix ObservationModel::sigma(int t, const Vector& x) const {
    return (obs_scale * obs_scale) * cov_fn(t, x);
}

Matrix ObservationModel::covariance(int t, const Vector& x) const {
    Matrix c = cov_fn(t, x);
    c.diagonal().array() += sigma_xi_sq;
    return (obs_scale * obs_scale) * c;
}

void validate(const SystemSpec& spec) {
    if (spec.space.dim() < 1) throw ModelError("state space not initialised");
    if (spec.obs.N < 1) throw ModelError("observation dimension must be positive");
    if (!(spec.obs.sigma_xi_sq > 0)) throw ModelError("sigma_xi_sq must be positive");
    if (!(spec.obs.obs_scale > 0)) throw ModelError("obs_scale must be positive");
    if (!spec.obs.mean_fn || !spec.obs.cov_fn) throw ModelError("observation maps missing");
    if (!spec.kernel.sampler || !spec.kernel.initial_sampler)
        throw ModelError("transition kernel sampler missing");
    if (spec.kernel.order < 1) throw ModelError("kernel order must be positive");
    const auto& c = spec.constants;
    if (!std::isfinite(c.lambda_inf) || !std::isfinite(c.lambda_sup) || !std::isfinite(c.mu_sup) ||
        !std::isfinite(c.K_mu) || !std::isfinite(c.K_sigma))
        throw ModelError("assumption constants must be finite");
    if (!(c.lambda_inf > 1.0)) throw ModelError("lambda_inf must exceed 1");
    if (c.lambda_inf > c.lambda_sup) throw ModelError("lambda_inf exceeds lambda_sup");
    if (c.K_mu < 0 || c.K_sigma < 0 || c.mu_sup < 0)
        throw ModelError("Lipschitz and mean bounds must be nonnegative");
}

std::vector<Vector> simulate_states(const SystemSpec& spec, int T, std::uint64_t seed) {
    if (T < 0) throw ModelError("horizon must be nonnegative");
    Rng rng(seed, kStateStream);
    std::vector<Vector> xs;
    xs.reserve(static_cast<std::size_t>(T) + 1);
    xs.push_back(spec.kernel.initial_sampler(rng));
    const std::size_t order = static_cast<std::size_t>(spec.kernel.order);
    for (int t = 1; t <= T; ++t) {
        std::size_t begin = xs.size() > order ? xs.size() - order : 0;
        std::span<const Vector> hist(xs.data() + begin, xs.size() - begin);
        xs.push_back(spec.kernel.sampler(t, hist, rng));
    }
    for (std::size_t t = 0; t < xs.size(); ++t) {
        if (!spec.space.contains(xs[t]))
            throw ModelError("kernel produced state outside Z at t=" + std::to_string(t) + ": " +
                             format_point(xs[t]));
    }
    return xs;
}

Trajectory simulate(const SystemSpec& spec, int T, std::uint64_t seed) {
    Trajectory tr;
    tr.seed = seed;
    tr.states = simulate_states(spec, T, seed);
    Rng rng(seed, kObservationStream);
    const int N = spec.obs.N;
    tr.observations.reserve(tr.states.size());
    for (int t = 0; t <= T; ++t) {
        const Vector& x = tr.states[static_cast<std::size_t>(t)];
        Matrix c = spec.obs.cov_fn(t, x);
        if (c.rows() != N || c.cols() != N)
            throw ModelError("covariance has wrong shape at t=" + std::to_string(t));
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()))
            throw ModelError("covariance not symmetric at t=" + std::to_string(t) + ", x=" +
                             format_point(x));
        Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
            throw ModelError("covariance not positive semidefinite at t=" + std::to_string(t) +
                             ", x=" + format_point(x));
        c.diagonal().array() += spec.obs.sigma_xi_sq;
        Eigen::LLT<Matrix> llt(c);
        if (llt.info() != Eigen::Success)
            throw ModelError("Sigma + sigma_xi^2 I not positive definite at t=" + std::to_string(t) +
                             ", x=" + format_point(x));
        Vector u(N);
        for (int j = 0; j < N; ++j) u[j] = rng.normal();
        Vector y = spec.obs.mean_fn(t, x) + llt.matrixL() * u;
        tr.observations.push_back(spec.obs.obs_scale * y);
    }
    return tr;
}

Trajectory simulate_tilde(const SystemSpec& spec, int T, std::uint64_t seed) {
    Trajectory tr;
    tr.seed = seed;
    tr.states = simulate_states(spec, T, seed);
    Rng rng(seed, kObservationStream);
    tr.observations.reserve(tr.states.size());
    for (int t = 0; t <= T; ++t) {
        Vector u(spec.obs.N);
        for (int j = 0; j < spec.obs.N; ++j) u[j] = rng.normal();
        tr.observations.push_back(std::move(u));
    }
    return tr;
}

namespace {

bool exceeds(double measured, double declared) {
    return measured > declared + 1e-9 * std::max(1.0, std::abs(declared));
}

std::string probe_label(int t, const Vector& x) {
    return "t=" + std::to_string(t) + ", x=" + format_point(x);
}

std::string pair_label(int t, const Vector& x, const Vector& y) {
    return "t=" + std::to_string(t) + ", x=" + format_point(x) + ", y=" + format_point(y);
}

}  // namespace

AssumptionConstants verify_assumptions(const SystemSpec& spec, int n_probe, std::uint64_t seed) {
    if (n_probe < 2) throw ModelError("verify_assumptions needs n_probe >= 2");
    validate(spec);
    const int M = spec.M();
    Rng rng(seed, kProbeStream);

    std::vector<Vector> pts;
    if (M <= 10) {
        for (int mask = 0; mask < (1 << M); ++mask) {
            Vector c(M);
            for (int i = 0; i < M; ++i)
                c[i] = (mask >> i) & 1 ? spec.space.upper[i] : spec.space.lower[i];
            pts.push_back(c);
        }
    }
    for (int k = 0; k < n_probe; ++k) {
        Vector x(M);
        for (int i = 0; i < M; ++i) x[i] = rng.uniform(spec.space.lower[i], spec.space.upper[i]);
        pts.push_back(x);
    }

    const int t_max = spec.obs.stationary ? 0 : spec.horizon;
    const auto& decl = spec.constants;
    AssumptionConstants emp;
    emp.lambda_inf = std::numeric_limits<double>::infinity();
    emp.lambda_sup = 0.0;

    for (int t = 0; t <= t_max; ++t) {
        std::vector<Vector> mu(pts.size());
        std::vector<Matrix> sg(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            mu[k] = spec.obs.mean(t, pts[k]);
            sg[k] = spec.obs.sigma(t, pts[k]);
            const Matrix& s = sg[k];
            double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
            if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw ModelError("covariance not symmetric at " + probe_label(t, pts[k]));
            Eigen::SelfAdjointEigenSolver<Matrix> es_s(s, Eigen::EigenvaluesOnly);
            if (es_s.eigenvalues().minCoeff() < -1e-10 * scale)
                throw ModelError("covariance not positive semidefinite at " + probe_label(t, pts[k]));

            Eigen::SelfAdjointEigenSolver<Matrix> es(spec.obs.covariance(t, pts[k]),
                                                     Eigen::EigenvaluesOnly);
            double lo = es.eigenvalues().minCoeff();
            double hi = es.eigenvalues().maxCoeff();
            emp.lambda_inf = std::min(emp.lambda_inf, lo);
            emp.lambda_sup = std::max(emp.lambda_sup, hi);
            if (lo <= 1.0)
                throw AssumptionViolation("lambda_inf", probe_label(t, pts[k]), lo, 1.0);
            if (lo < decl.lambda_inf - 1e-9 * std::max(1.0, decl.lambda_inf))
                throw AssumptionViolation("lambda_inf", probe_label(t, pts[k]), lo, decl.lambda_inf);
            if (exceeds(hi, decl.lambda_sup))
                throw AssumptionViolation("lambda_sup", probe_label(t, pts[k]), hi, decl.lambda_sup);
            double mn = mu[k].norm();
            emp.mu_sup = std::max(emp.mu_sup, mn);
            if (exceeds(mn, decl.mu_sup))
                throw AssumptionViolation("mu_sup", probe_label(t, pts[k]), mn, decl.mu_sup);
        }
        for (std::size_t a = 0; a < pts.size(); ++a) {
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                double d = (pts[a] - pts[b]).lpNorm<1>();
                if (d <= 0) continue;
                double qm = (mu[a] - mu[b]).norm() / d;
                double qs = (sg[a] - sg[b]).cwiseAbs().maxCoeff() / d;
                emp.K_mu = std::max(emp.K_mu, qm);
                emp.K_sigma = std::max(emp.K_sigma, qs);
                if (exceeds(qm, decl.K_mu))
                    throw AssumptionViolation("K_mu", pair_label(t, pts[a], pts[b]), qm, decl.K_mu);
                if (exceeds(qs, decl.K_sigma))
                    throw AssumptionViolation("K_sigma", pair_label(t, pts[a], pts[b]), qs,
                                              decl.K_sigma);
            }
        }
    }
    return emp;
}

}  // namespace cmf
