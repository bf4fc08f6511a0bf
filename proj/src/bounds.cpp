#include "cmfilter/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/rng.hpp"

namespace cmf {

double matrix_norm(const Matrix& m, MatrixNorm norm) {
    switch (norm) {
        case MatrixNorm::kFrobenius: return m.norm();
        case MatrixNorm::kSpectral: {
            if (m.size() == 0) return 0.0;
            Eigen::JacobiSVD<Matrix> svd(m);
            return svd.singularValues()(0);
        }
        case MatrixNorm::kMaxColSum: return m.cwiseAbs().colwise().sum().maxCoeff();
        case MatrixNorm::kMaxRowSum: return m.cwiseAbs().rowwise().sum().maxCoeff();
    }
    return 0.0;
}

double vector_norm(const Vector& v, MatrixNorm norm) {
    switch (norm) {
        case MatrixNorm::kFrobenius:
        case MatrixNorm::kSpectral: return v.norm();
        case MatrixNorm::kMaxColSum: return v.lpNorm<1>();
        case MatrixNorm::kMaxRowSum: return v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

std::string norm_name(MatrixNorm norm) {
    switch (norm) {
        case MatrixNorm::kFrobenius: return "frobenius";
        case MatrixNorm::kSpectral: return "spectral";
        case MatrixNorm::kMaxColSum: return "max_col_sum";
        case MatrixNorm::kMaxRowSum: return "max_row_sum";
    }
    return "unknown";
}

void BoundReport::observe(double lhs, double rhs) {
    ++n_trials;
    double r;
    if (rhs > 0) r = lhs / rhs;
    else r = lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
    worst_ratio = std::max(worst_ratio, r);
}

void check_product_bound(const std::vector<Matrix>& A, const std::vector<Matrix>& B, MatrixNorm norm,
                         BoundReport& report) {
    if (A.size() != B.size() || A.empty()) throw DomainError("product bound needs equal nonempty sequences");
    const auto n = static_cast<Eigen::Index>(A[0].rows());
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (A[i].rows() != n || A[i].cols() != n || B[i].rows() != n || B[i].cols() != n)
            throw DomainError("product bound needs square matrices of one size");
    }
    Matrix pa = A[0], pb = B[0];
    for (std::size_t i = 1; i < A.size(); ++i) {
        pa = pa * A[i];
        pb = pb * B[i];
    }
    const double lhs = matrix_norm(pa - pb, norm);
    std::vector<double> na(A.size()), nb(B.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        na[i] = matrix_norm(A[i], norm);
        nb[i] = matrix_norm(B[i], norm);
    }
    double rhs = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        double term = matrix_norm(A[i] - B[i], norm);
        for (std::size_t j = 0; j < i; ++j) term *= na[j];
        for (std::size_t j = i + 1; j < A.size(); ++j) term *= nb[j];
        rhs += term;
    }
    report.observe(lhs, rhs);
}

BoundReport check_product_bound(const std::vector<Matrix>& A, const std::vector<Matrix>& B, MatrixNorm norm) {
    BoundReport r;
    r.lemma = "product_difference_" + norm_name(norm);
    check_product_bound(A, B, norm, r);
    return r;
}

BoundReport check_pair_bound_scalar(double a, double b, double x, double y) {
    BoundReport r;
    r.lemma = "pair_scalar";
    r.observe(std::abs(a * x - b * y), std::abs(a) * std::abs(x - y) + std::abs(y) * std::abs(a - b));
    return r;
}

BoundReport check_pair_bound_matrix(const Matrix& A, const Matrix& B, const Matrix& X, const Matrix& Y,
                                    MatrixNorm norm) {
    BoundReport r;
    r.lemma = "pair_matrix_" + norm_name(norm);
    r.observe(matrix_norm(A * X - B * Y, norm),
              matrix_norm(A, norm) * matrix_norm(X - Y, norm) + matrix_norm(Y, norm) * matrix_norm(A - B, norm));
    return r;
}

BoundReport check_pair_bound_vector(const Matrix& A, const Matrix& B, const Vector& x, const Vector& y,
                                    MatrixNorm norm) {
    BoundReport r;
    r.lemma = "pair_vector_" + norm_name(norm);
    r.observe(vector_norm(A * x - B * y, norm),
              matrix_norm(A, norm) * vector_norm(x - y, norm) + vector_norm(y, norm) * matrix_norm(A - B, norm));
    return r;
}

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

// Half the draws are small perturbations of A, where the bound is nearly tight.
Matrix partner(const Matrix& a, Rng& rng) {
    if (rng.uniform() < 0.5) return random_matrix(static_cast<int>(a.rows()), static_cast<int>(a.cols()), rng);
    double eps = std::pow(10.0, -1.0 - 5.0 * rng.uniform());
    return a + eps * random_matrix(static_cast<int>(a.rows()), static_cast<int>(a.cols()), rng);
}

void merge(BoundReport& into, const BoundReport& r) {
    into.n_trials += r.n_trials;
    into.worst_ratio = std::max(into.worst_ratio, r.worst_ratio);
}

}  // namespace

BoundReport random_product_trials(long n_trials, int dim, int length, MatrixNorm norm, std::uint64_t seed) {
    BoundReport r;
    r.lemma = "product_difference_" + norm_name(norm);
    r.seed = seed;
    Rng rng(seed, kTrialStream);
    for (long k = 0; k < n_trials; ++k) {
        std::vector<Matrix> A, B;
        for (int i = 0; i < length; ++i) {
            double scale = std::exp(rng.uniform(-1.0, 1.0));
            A.push_back(scale * random_matrix(dim, dim, rng));
            B.push_back(partner(A.back(), rng));
        }
        check_product_bound(A, B, norm, r);
    }
    r.constants["dim"] = dim;
    r.constants["length"] = length;
    return r;
}

BoundReport random_pair_trials(long n_trials, int dim, MatrixNorm norm, std::uint64_t seed) {
    BoundReport r;
    r.lemma = "pair_" + norm_name(norm);
    r.seed = seed;
    Rng rng(seed, kTrialStream, 1);
    for (long k = 0; k < n_trials; ++k) {
        merge(r, check_pair_bound_scalar(rng.normal(), rng.normal(), rng.normal(), rng.normal()));
        Matrix A = random_matrix(dim, dim, rng), X = random_matrix(dim, dim, rng);
        merge(r, check_pair_bound_matrix(A, partner(A, rng), X, partner(X, rng), norm));
        Vector x = random_matrix(dim, 1, rng), y = x + 1e-3 * Vector(random_matrix(dim, 1, rng));
        merge(r, check_pair_bound_vector(A, partner(A, rng), x, rng.uniform() < 0.5 ? y : Vector(random_matrix(dim, 1, rng)), norm));
    }
    r.constants["dim"] = dim;
    return r;
}

Matrix minor_matrix(const Matrix& m, int row, int col) {
    const int n = static_cast<int>(m.rows());
    Matrix s(n - 1, n - 1);
    for (int i = 0, si = 0; i < n; ++i) {
        if (i == row) continue;
        for (int j = 0, sj = 0; j < n; ++j) {
            if (j == col) continue;
            s(si, sj++) = m(i, j);
        }
        ++si;
    }
    return s;
}

double cofactor_determinant(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    if (n != m.cols()) throw DomainError("determinant of a non-square matrix");
    if (n == 0) return 1.0;
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    double det = 0.0;
    for (int j = 0; j < n; ++j) {
        double sign = (j % 2 == 0) ? 1.0 : -1.0;
        det += sign * m(0, j) * cofactor_determinant(minor_matrix(m, 0, j));
    }
    return det;
}

Matrix adjugate(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    if (n > 8) throw DomainError("cofactor adjugate limited to N <= 8");
    Matrix adj(n, n);
    if (n == 1) {
        adj(0, 0) = 1.0;
        return adj;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            adj(j, i) = sign * cofactor_determinant(minor_matrix(m, i, j));
        }
    return adj;
}

BoundReport check_adjugate_bound(long n_trials, int N, std::uint64_t seed) {
    if (N < 1 || N > 5) throw DomainError("adjugate check supports 1 <= N <= 5");
    BoundReport r;
    r.lemma = "adjugate_N" + std::to_string(N);
    r.seed = seed;
    Rng rng(seed, kTrialStream, 2);
    for (long k = 0; k < n_trials; ++k) {
        Eigen::HouseholderQR<Matrix> qr(random_matrix(N, N, rng));
        Matrix Q = qr.householderQ();
        Vector ev(N);
        for (int i = 0; i < N; ++i)
            ev[i] = 1.0 + (rng.uniform() < 0.3 ? 1e-6 * rng.uniform() : std::exp(rng.uniform(-3.0, 2.0)));
        Matrix C = Q * ev.asDiagonal() * Q.transpose();
        C = 0.5 * (C + C.transpose());
        r.observe(adjugate(C).norm(), std::sqrt(static_cast<double>(N)) * cofactor_determinant(C));
    }
    r.constants["N"] = N;
    return r;
}

double analytic_k_det_total(int N, double lambda_sup) {
    return std::sqrt(static_cast<double>(N)) * std::pow(lambda_sup, N - 1);
}

double analytic_k_minor(int N, double lambda_sup) {
    if (N < 2) return 0.0;
    return std::sqrt(static_cast<double>(N - 1)) * std::pow(lambda_sup, N - 2);
}

double k_inv_formula(double lambda_inf, double K_DET, double K_det, double K_sigma) {
    const double L = std::log(lambda_inf);
    if (!(L > 0)) return std::numeric_limits<double>::infinity();
    return 27.0 * std::pow(lambda_inf, -3.0 / L) / (L * L * L) * (K_DET + K_det) * K_sigma;
}

DerivedConstants analytic_derived_constants(const SystemSpec& spec) {
    const int N = spec.N();
    const auto& c = spec.constants;
    DerivedConstants d;
    d.K_DET = analytic_k_det_total(N, c.lambda_sup) / N;
    d.K_det = analytic_k_minor(N, c.lambda_sup) / N;
    d.K_INV = k_inv_formula(c.lambda_inf, d.K_DET, d.K_det, c.K_sigma);
    return d;
}

bool LipschitzSuiteReport::pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.pass(); });
}

namespace {

Vector random_point(const StateSpace& z, Rng& rng) {
    Vector x(z.dim());
    for (int i = 0; i < z.dim(); ++i) x[i] = rng.uniform(z.lower[i], z.upper[i]);
    return x;
}

int random_time(const SystemSpec& spec, Rng& rng) {
    if (spec.obs.stationary || spec.horizon <= 0) return 0;
    return std::min(spec.horizon, static_cast<int>(rng.uniform() * (spec.horizon + 1)));
}

}  // namespace

LipschitzSuiteReport check_lipschitz_suite(const SystemSpec& spec, long n_pairs, std::uint64_t seed) {
    const int N = spec.N();
    const auto& c = spec.constants;
    LipschitzSuiteReport out;
    out.constants = analytic_derived_constants(spec);
    DerivedConstants& dc = out.constants;
    const double nkdet = N * dc.K_DET, nkminor = N * dc.K_det;

    BoundReport sig, det, minor, inv, inv_emp;
    sig.lemma = "sigma_frobenius";
    det.lemma = "det_lipschitz";
    minor.lemma = "minor_lipschitz";
    inv.lemma = "inverse_lipschitz";
    inv_emp.lemma = "inverse_formula_empirical";
    for (BoundReport* r : {&sig, &det, &minor, &inv, &inv_emp}) r->seed = seed;

    Rng rng(seed, kTrialStream, 3);
    std::vector<double> inv_lhs, dxs;
    for (long k = 0; k < n_pairs; ++k) {
        const int t = random_time(spec, rng);
        Vector x = random_point(spec.space, rng), y = random_point(spec.space, rng);
        if (k % 4 == 1) {
            // nearby pairs probe the local Lipschitz quotient
            double eps = std::pow(10.0, -2.0 - 4.0 * rng.uniform());
            for (int i = 0; i < x.size(); ++i)
                y[i] = std::clamp(x[i] + eps * rng.normal(), spec.space.lower[i], spec.space.upper[i]);
        }
        const double dx = (x - y).lpNorm<1>();
        if (dx <= 0) continue;
        Matrix Cx = spec.obs.covariance(t, x), Cy = spec.obs.covariance(t, y);
        Matrix dC = Cx - Cy;
        const double dCf = dC.norm();

        sig.observe((spec.obs.sigma(t, x) - spec.obs.sigma(t, y)).norm(), N * c.K_sigma * dx);

        double ddet = std::abs(Cx.determinant() - Cy.determinant());
        det.observe(ddet, nkdet * dCf);
        if (dCf > 0) dc.K_DET_emp = std::max(dc.K_DET_emp, ddet / (N * dCf));

        double dmin = 0.0;
        if (N >= 2) {
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    dmin = std::max(dmin, std::abs(minor_matrix(Cx, i, j).determinant() -
                                                   minor_matrix(Cy, i, j).determinant()));
        }
        minor.observe(dmin, nkminor * dCf);
        if (dCf > 0) dc.K_det_emp = std::max(dc.K_det_emp, dmin / (N * dCf));

        Eigen::LLT<Matrix> lx(Cx), ly(Cy);
        Matrix I = Matrix::Identity(N, N);
        double dinv = (lx.solve(I) - ly.solve(I)).norm();
        inv.observe(dinv, dc.K_INV * dx);
        dc.K_INV_emp = std::max(dc.K_INV_emp, dinv / dx);
        inv_lhs.push_back(dinv);
        dxs.push_back(dx);
    }
    dc.K_INV_formula_emp = k_inv_formula(c.lambda_inf, dc.K_DET_emp, dc.K_det_emp, c.K_sigma);
    for (std::size_t i = 0; i < inv_lhs.size(); ++i) inv_emp.observe(inv_lhs[i], dc.K_INV_formula_emp * dxs[i]);

    sig.constants = {{"K_sigma", c.K_sigma}, {"N", N}};
    det.constants = {{"K_DET", dc.K_DET}, {"K_DET_emp", dc.K_DET_emp}, {"N", N}};
    minor.constants = {{"K_det", dc.K_det}, {"K_det_emp", dc.K_det_emp}, {"N", N}};
    inv.constants = {{"K_INV", dc.K_INV}, {"K_INV_emp", dc.K_INV_emp}, {"N", N}};
    inv_emp.constants = {{"K_INV_formula_emp", dc.K_INV_formula_emp}, {"K_INV_emp", dc.K_INV_emp}, {"N", N}};
    out.reports = {sig, det, minor, inv, inv_emp};
    return out;
}

double theta_bound(const SystemSpec& spec, double K_INV, const Vector& y) {
    const auto& c = spec.constants;
    const double r = y.norm() + c.mu_sup;
    return c.K_mu * 2.0 * r / c.lambda_inf + K_INV * r * r;
}

double theta_bound(const SystemSpec& spec, const Vector& y) {
    return theta_bound(spec, analytic_derived_constants(spec).K_INV, y);
}

BoundReport check_theta_bound(const SystemSpec& spec, long n_trials, std::uint64_t seed) {
    const int N = spec.N();
    const double K_INV = analytic_derived_constants(spec).K_INV;
    BoundReport r;
    r.lemma = "theta_quadratic_form";
    r.seed = seed;
    Rng rng(seed, kTrialStream, 4);
    auto qf = [&](int t, const Vector& x, const Vector& y) {
        Eigen::LLT<Matrix> llt(spec.obs.covariance(t, x));
        Vector yb = y - spec.obs.mean(t, x);
        return yb.dot(llt.solve(yb));
    };
    for (long k = 0; k < n_trials; ++k) {
        const int t = random_time(spec, rng);
        Vector x = random_point(spec.space, rng), xp = random_point(spec.space, rng);
        if (k % 3 == 1) {
            double eps = std::pow(10.0, -2.0 - 3.0 * rng.uniform());
            for (int i = 0; i < x.size(); ++i)
                xp[i] = std::clamp(x[i] + eps * rng.normal(), spec.space.lower[i], spec.space.upper[i]);
        }
        const double dx = (x - xp).lpNorm<1>();
        if (dx <= 0) continue;
        Vector y(N);
        double scale = std::exp(rng.uniform(-2.0, 2.5));
        for (int j = 0; j < N; ++j) y[j] = scale * rng.normal();
        r.observe(std::abs(qf(t, x, y) - qf(t, xp, y)), theta_bound(spec, K_INV, y) * dx);
    }
    r.constants = {{"K_INV", K_INV}, {"K_mu", spec.constants.K_mu}, {"N", N}};
    return r;
}

void write_bound_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
    os << "lemma,worst_ratio,pass,n_trials,seed,constants\n";
    for (const auto& r : reports) {
        os << r.lemma << "," << format_double(r.worst_ratio) << "," << (r.pass() ? 1 : 0) << ","
           << r.n_trials << "," << r.seed << ",";
        bool first = true;
        for (const auto& [k, v] : r.constants) {
            if (!first) os << ";";
            os << k << "=" << format_double(v);
            first = false;
        }
        os << "\n";
    }
}

}  // namespace cmf
