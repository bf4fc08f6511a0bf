#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cmfilter/concentration.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/harness.hpp"
#include "cmfilter/model_registry.hpp"
#include "oracles.hpp"

using namespace cmf;
using namespace cmf::testing;

TEST(ReferenceFilter, FiniteTruthIsExact) {
    SystemSpec s = make_system(finite_params(4, 2, 1, 10));
    ReferenceFilter ref(s, 4, 0, 1);
    EXPECT_TRUE(ref.exact());
    Trajectory tr = simulate(s, 10, 3);
    auto a = ref(tr.observations);
    auto b = exact_forward_filter(s, tr.observations);
    for (int t = 0; t <= 10; ++t) EXPECT_EQ(a[t], b[t]);
}

TEST(ReferenceFilter, SurrogatePolicy) {
    SystemSpec s = make_system(random_walk_params(2, 5));
    EXPECT_THROW(ReferenceFilter(s, 512, 4095, 1), ConfigError);
    ReferenceFilter ok(s, 512, 4096, 1);
    EXPECT_FALSE(ok.exact());
    EXPECT_EQ(ok.A_ref(), 4096);
    EXPECT_NE(ok.label().find("surrogate"), std::string::npos);
    ReferenceFilter dflt(s, 16, 0, 1);
    EXPECT_EQ(dflt.A_ref(), 128);
}

TEST(ConvergenceSweep, ExactnessSaturation) {
    SystemSpec s = make_system(finite_params(4, 2, 2, 15));
    SweepOptions o;
    o.T = 15;
    o.resolutions = {2, 4};
    o.n_traj = 10;
    o.C = 1.0;
    o.seed = 5;
    ConvergenceCurve cv = convergence_sweep(s, o);
    EXPECT_TRUE(cv.reference_exact);
    EXPECT_LE(cv.max_error[1], 1e-10);
    EXPECT_GT(cv.max_error[0], 1e-6);
    EXPECT_LE(cv.lambda_gap, 1e-12);
}

TEST(ConvergenceSweep, ErrorShrinksAndIsReproducible) {
    SystemSpec s = make_system(random_walk_params(2, 10));
    SweepOptions o;
    o.T = 10;
    o.resolutions = {4, 8, 16, 32};
    o.n_traj = 8;
    o.seed = 3;
    o.A_ref = 256;
    ConvergenceCurve a = convergence_sweep(s, o);
    EXPECT_LT(a.mean_error.back(), a.mean_error.front());
    EXPECT_TRUE(a.self_consistent) << a.self_gap;
    EXPECT_TRUE(a.bound_dominated);
    EXPECT_EQ(a.n_aborted, 0);
    EXPECT_EQ(a.n_traj + a.n_rejected, a.n_total);
    for (double e : a.mean_error) EXPECT_GE(e, 0.0);
    o.workers = 3;
    ConvergenceCurve b = convergence_sweep(s, o);
    EXPECT_EQ(a.mean_error, b.mean_error);
    EXPECT_EQ(a.max_error, b.max_error);
    std::stringstream sa, sb;
    write_curve_csv(sa, a, {{"seed", "3"}});
    write_curve_csv(sb, b, {{"seed", "3"}});
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(ConvergenceSweep, BoundHalvesWithCellWidth) {
    SystemSpec s = make_system(random_walk_params(2, 5));
    SweepOptions o;
    o.T = 5;
    o.resolutions = {4, 8, 16};
    o.n_traj = 2;
    o.A_ref = 128;
    o.self_check = false;
    ConvergenceCurve cv = convergence_sweep(s, o);
    for (std::size_t i = 0; i + 1 < cv.resolutions.size(); ++i) {
        EXPECT_NEAR(cv.sup_l1[i] / cv.sup_l1[i + 1], 2.0, 1e-14);
        EXPECT_NEAR(cv.log_bound_v1[i] - cv.log_bound_v1[i + 1], std::log(2.0), 1e-12);
        EXPECT_NEAR(cv.log_bound_v2[i] - cv.log_bound_v2[i + 1], std::log(2.0), 1e-12);
        EXPECT_LE(cv.empirical_l1[i], cv.sup_l1[i]);
    }
}

TEST(ConvergenceSweep, RejectionRateConsistentWithLemma) {
    SystemSpec s = make_system(random_walk_params(2, 4));
    SweepOptions o;
    o.T = 4;
    o.resolutions = {4};
    o.n_traj = 400;
    o.A_ref = 32;
    o.self_check = false;
    o.gamma = 1.0;  // sensitivity override: a small gamma forces rejections
    ConvergenceCurve cv = convergence_sweep(s, o);
    EXPECT_GT(cv.n_rejected, 0);
    EXPECT_EQ(cv.n_traj + cv.n_rejected, cv.n_total);
    SweepOptions d = o;
    d.gamma.reset();
    ConvergenceCurve cd = convergence_sweep(s, d);
    const double p = 1 - omega_probability_bound(1.0, 2, 4);
    const double frac = double(cd.n_rejected) / cd.n_total;
    EXPECT_LE(frac, 2 * p + 3 * std::sqrt(p * (1 - p) / cd.n_total));
}

TEST(KG, ConstantModelVanishes) {
    ModelParams p = random_walk_params(2, 5);
    p.kernel = "uniform";
    p.observation = "constant";
    p.alpha = 0.3;
    p.beta = 0.8;
    SystemSpec s = make_system(p);
    KGReport kg = kg_evaluate(s, 5, 1.0, {4, 8});
    EXPECT_EQ(kg.K_G_v1, 0.0);
    EXPECT_EQ(kg.K_G_v2, 0.0);
    EXPECT_EQ(kg.bound_v1[0], 0.0);
    SweepOptions o;
    o.T = 5;
    o.resolutions = {4, 8};
    o.n_traj = 5;
    o.A_ref = 64;
    ConvergenceCurve cv = convergence_sweep(s, o);
    for (double e : cv.max_error) EXPECT_LE(e, 1e-12);
}

TEST(KG, LogVariantSmallerAtLongHorizons) {
    SystemSpec s = make_system(random_walk_params(2, 20));
    for (int T : {100, 1000}) {
        KGReport kg = kg_evaluate(s, T, 1.0);
        EXPECT_TRUE(std::isfinite(kg.K_G_v1) && kg.K_G_v1 > 0);
        EXPECT_TRUE(std::isfinite(kg.K_G_v2) && kg.K_G_v2 > 0);
        EXPECT_LE(kg.K_G_v2, kg.K_G_v1) << T;
    }
    EXPECT_NEAR(kg_evaluate(s, 20, 1.0).gamma_tilde,
                std::sqrt(gamma_filter(s.constants)) + s.constants.mu_sup, 1e-12);
}

TEST(KG, HalfCellAndDenominator) {
    StateSpace z(Vector::Constant(2, 0.0), Vector::Constant(2, 2.0));
    EXPECT_DOUBLE_EQ(half_cell_l1(z, 4), 0.5);
    SystemSpec s = make_system(random_walk_params(2, 3));
    const auto& c = s.constants;
    double g = 5.0;
    double thr = omega_threshold(g, 1.0, 2, 3);
    double expect = -std::pow(std::sqrt(thr) + c.mu_sup, 2) * 4 / (2 * c.lambda_inf) - 0.5 * 2 * 4 * std::log(c.lambda_sup);
    EXPECT_NEAR(log_denominator_bound(s, 3, 1.0, g), expect, 1e-12 * std::abs(expect));
}

TEST(CurveCsv, ColumnsAndEcho) {
    SystemSpec s = make_system(finite_params(2, 1, 2, 3));
    SweepOptions o;
    o.T = 3;
    o.resolutions = {2};
    o.n_traj = 2;
    ConvergenceCurve cv = convergence_sweep(s, o);
    std::stringstream ss;
    write_curve_csv(ss, cv, {{"config.model.kernel", "finite_chain"}});
    CsvTable t = read_csv(ss);
    ASSERT_GE(t.header.size(), 6u);
    EXPECT_EQ(std::vector<std::string>(t.header.begin(), t.header.begin() + 6),
              (std::vector<std::string>{"A", "mean_sup_error", "max_sup_error", "analytic_bound", "n_traj",
                                        "n_rejected"}));
    EXPECT_EQ(t.meta.at("config.model.kernel"), "finite_chain");
    std::stringstream ks;
    write_kg_csv(ks, cv.kg, {});
    EXPECT_NE(ks.str().find("K_G_v1"), std::string::npos);
}
