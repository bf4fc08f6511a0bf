#include "cmfilter/likelihood.hpp"

#include <cmath>

#include "cmfilter/errors.hpp"

namespace cmf {

QuadFormWorkspace QuadFormWorkspace::factor(const Matrix& C, const std::string& where) {
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success)
        throw PositiveDefinitenessError("covariance not positive definite at " + where);
    QuadFormWorkspace ws;
    ws.chol = llt.matrixL();
    const auto d = ws.chol.diagonal();
    if ((d.array() <= 0).any() || !d.allFinite())
        throw PositiveDefinitenessError("covariance not positive definite at " + where);
    ws.log_det = 2.0 * d.array().log().sum();
    return ws;
}

double QuadFormWorkspace::quad_form(const Vector& ybar) const {
    Vector v = chol.triangularView<Eigen::Lower>().solve(ybar);
    return v.squaredNorm();
}

QuadFormWorkspace covariance_factor(const SystemSpec& spec, int t, const Vector& x) {
    return QuadFormWorkspace::factor(spec.obs.covariance(t, x),
                                     "t=" + std::to_string(t) + ", x=" + format_point(x));
}

double log_lambda_hat(const Vector& mu, const QuadFormWorkspace& ws, const Vector& y) {
    return -0.5 * ws.quad_form(y - mu) - 0.5 * ws.log_det;
}

double log_lambda(const Vector& mu, const QuadFormWorkspace& ws, const Vector& y) {
    return 0.5 * y.squaredNorm() + log_lambda_hat(mu, ws, y);
}

double log_lambda(const SystemSpec& spec, int t, const Vector& x, const Vector& y) {
    return log_lambda(spec.obs.mean(t, x), covariance_factor(spec, t, x), y);
}

double log_lambda_hat(const SystemSpec& spec, int t, const Vector& x, const Vector& y) {
    return log_lambda_hat(spec.obs.mean(t, x), covariance_factor(spec, t, x), y);
}

LogLikelihoodTerms accumulate(const LogLikelihoodTerms& terms, double new_log_lambda) {
    LogLikelihoodTerms out = terms;
    out.per_step.push_back(new_log_lambda);
    out.cumulative.push_back((terms.cumulative.empty() ? 0.0 : terms.cumulative.back()) + new_log_lambda);
    return out;
}

EmissionTable::EmissionTable(const SystemSpec& spec, const Grid& grid) : spec_(&spec), grid_(&grid) {
    if (spec.obs.stationary) fill(0, mu_, ws_);
}

void EmissionTable::fill(int t, std::vector<Vector>& mu, std::vector<QuadFormWorkspace>& ws) const {
    const int K = grid_->total_points();
    mu.resize(static_cast<std::size_t>(K));
    ws.resize(static_cast<std::size_t>(K));
    for (int l = 0; l < K; ++l) {
        mu[static_cast<std::size_t>(l)] = spec_->obs.mean(t, grid_->center(l));
        ws[static_cast<std::size_t>(l)] = covariance_factor(*spec_, t, grid_->center(l));
    }
}

Vector EmissionTable::log_terms(int t, const Vector& y, LikelihoodForm form) const {
    const int K = grid_->total_points();
    std::vector<Vector> mu_t;
    std::vector<QuadFormWorkspace> ws_t;
    const std::vector<Vector>* mu = &mu_;
    const std::vector<QuadFormWorkspace>* ws = &ws_;
    if (!spec_->obs.stationary) {
        fill(t, mu_t, ws_t);
        mu = &mu_t;
        ws = &ws_t;
    }
    Vector out(K);
    for (int l = 0; l < K; ++l) {
        const auto i = static_cast<std::size_t>(l);
        out[l] = form == LikelihoodForm::kFull ? log_lambda((*mu)[i], (*ws)[i], y)
                                               : log_lambda_hat((*mu)[i], (*ws)[i], y);
    }
    return out;
}

}  // namespace cmf
