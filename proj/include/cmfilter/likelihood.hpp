#pragma once

#include <vector>

#include "cmfilter/model.hpp"
#include "cmfilter/quantize.hpp"

namespace cmf {

// Cholesky factor of C_t(x) with its log determinant.
struct QuadFormWorkspace {
    Matrix chol;  // lower triangular L, C = L L^T
    double log_det = 0.0;

    // Throws PositiveDefinitenessError; `where` names (t, x) in the message.
    static QuadFormWorkspace factor(const Matrix& C, const std::string& where);

    // ybar^T C^{-1} ybar via one triangular solve.
    double quad_form(const Vector& ybar) const;
};

QuadFormWorkspace covariance_factor(const SystemSpec& spec, int t, const Vector& x);

// log lambda = 1/2 |y|^2 - 1/2 ybar^T C^{-1} ybar - 1/2 log det C
double log_lambda(const SystemSpec& spec, int t, const Vector& x, const Vector& y);
double log_lambda(const Vector& mu, const QuadFormWorkspace& ws, const Vector& y);

// log lambda - 1/2 |y|^2, computed without forming the |y|^2 terms.
double log_lambda_hat(const SystemSpec& spec, int t, const Vector& x, const Vector& y);
double log_lambda_hat(const Vector& mu, const QuadFormWorkspace& ws, const Vector& y);

struct LogLikelihoodTerms {
    std::vector<double> per_step;
    std::vector<double> cumulative;
};

LogLikelihoodTerms accumulate(const LogLikelihoodTerms& terms, double new_log_lambda);

enum class LikelihoodForm { kNormalized, kFull };

// Per grid point means and factorizations; cached once for stationary models.
class EmissionTable {
public:
    EmissionTable(const SystemSpec& spec, const Grid& grid);

    // log likelihood of y at every grid center at time t.
    Vector log_terms(int t, const Vector& y, LikelihoodForm form) const;

private:
    void fill(int t, std::vector<Vector>& mu, std::vector<QuadFormWorkspace>& ws) const;

    const SystemSpec* spec_;
    const Grid* grid_;
    std::vector<Vector> mu_;
    std::vector<QuadFormWorkspace> ws_;
};

}  // namespace cmf
