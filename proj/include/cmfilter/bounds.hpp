#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cmfilter/model.hpp"

namespace cmf {

enum class MatrixNorm { kFrobenius, kSpectral, kMaxColSum, kMaxRowSum };

double matrix_norm(const Matrix& m, MatrixNorm norm);
// Vector norm whose induced operator norm is `norm` (Frobenius pairs with ell_2).
double vector_norm(const Vector& v, MatrixNorm norm);
std::string norm_name(MatrixNorm norm);

struct BoundReport {
    std::string lemma;
    long n_trials = 0;
    double worst_ratio = 0.0;  // max lhs/rhs
    std::map<std::string, double> constants;
    std::uint64_t seed = 0;

    bool pass() const { return worst_ratio <= 1.0 + 1e-9; }
    void observe(double lhs, double rhs);
};

// Single instance of the product difference inequality; products are A_1 A_2 ... A_n.
BoundReport check_product_bound(const std::vector<Matrix>& A, const std::vector<Matrix>& B,
                                MatrixNorm norm);
// Accumulates into `report`.
void check_product_bound(const std::vector<Matrix>& A, const std::vector<Matrix>& B, MatrixNorm norm,
                         BoundReport& report);

// |ax - by| <= |a||x - y| + |y||a - b|
BoundReport check_pair_bound_scalar(double a, double b, double x, double y);
// Square matrices, submultiplicative norm.
BoundReport check_pair_bound_matrix(const Matrix& A, const Matrix& B, const Matrix& X, const Matrix& Y,
                                    MatrixNorm norm);
// Matrix times vector with the subordinate operator norm.
BoundReport check_pair_bound_vector(const Matrix& A, const Matrix& B, const Vector& x, const Vector& y,
                                    MatrixNorm norm);

BoundReport random_product_trials(long n_trials, int dim, int length, MatrixNorm norm, std::uint64_t seed);
BoundReport random_pair_trials(long n_trials, int dim, MatrixNorm norm, std::uint64_t seed);

// Laplace expansion along the first row; independent of any factorization.
double cofactor_determinant(const Matrix& m);
Matrix minor_matrix(const Matrix& m, int row, int col);
Matrix adjugate(const Matrix& m);

// ||adj C||_F <= sqrt(N) det C over random SPD C with lambda_min > 1, N <= 5.
BoundReport check_adjugate_bound(long n_trials, int N, std::uint64_t seed);

// Rigorous Lipschitz factors: N K_DET = sqrt(N) lambda_sup^(N-1) bounds the Frobenius
// gradient of det, N K_det = sqrt(N-1) lambda_sup^(N-2) that of every (N-1)-minor.
double analytic_k_det_total(int N, double lambda_sup);
double analytic_k_minor(int N, double lambda_sup);
// 27 lambda_inf^(-3/log lambda_inf) / (log lambda_inf)^3 * (K_DET + K_det) * K_sigma
double k_inv_formula(double lambda_inf, double K_DET, double K_det, double K_sigma);

struct DerivedConstants {
    double K_DET = 0.0;      // analytic
    double K_det = 0.0;      // analytic
    double K_INV = 0.0;      // formula with the analytic constants
    double K_DET_emp = 0.0;  // max quotient over probes
    double K_det_emp = 0.0;
    double K_INV_emp = 0.0;
    double K_INV_formula_emp = 0.0;  // formula with the empirical constants
};

DerivedConstants analytic_derived_constants(const SystemSpec& spec);

struct LipschitzSuiteReport {
    std::vector<BoundReport> reports;
    DerivedConstants constants;
    bool pass() const;
};

LipschitzSuiteReport check_lipschitz_suite(const SystemSpec& spec, long n_pairs, std::uint64_t seed);

// Theta(y) = K_mu 2(|y| + mu_sup)/lambda_inf + K_INV (|y| + mu_sup)^2
double theta_bound(const SystemSpec& spec, double K_INV, const Vector& y);
double theta_bound(const SystemSpec& spec, const Vector& y);

// |ybar' C^{-1}(x) ybar - ybar'' C^{-1}(x') ybar''| <= Theta(y) |x - x'|_1 on random draws.
BoundReport check_theta_bound(const SystemSpec& spec, long n_trials, std::uint64_t seed);

void write_bound_csv(std::ostream& os, const std::vector<BoundReport>& reports);

}  // namespace cmf
