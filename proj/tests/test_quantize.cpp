#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cmfilter/errors.hpp"
#include "cmfilter/model_registry.hpp"
#include "cmfilter/quantize.hpp"
#include "oracles.hpp"

using namespace cmf;
using namespace cmf::testing;

namespace {

StateSpace unit(int M = 1) { return StateSpace(Vector::Zero(M), Vector::Ones(M)); }

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(QuantizePoint, InteriorPoint) {
    Grid g(unit(), 4);
    EXPECT_EQ(quantize_point(g, v1(0.3)), 1);
    EXPECT_DOUBLE_EQ(g.center(1)(0), 0.375);
}

TEST(QuantizePoint, LeftClosedBoundary) {
    Grid g(unit(), 4);
    EXPECT_EQ(quantize_point(g, v1(0.25)), 1);
}

TEST(QuantizePoint, UpperEdgeInLastCell) {
    Grid g(unit(), 4);
    EXPECT_EQ(quantize_point(g, v1(1.0)), 3);
    EXPECT_DOUBLE_EQ(g.center(3)(0), 0.875);
    EXPECT_EQ(quantize_point(g, v1(0.0)), 0);
}

TEST(QuantizePoint, OutsideBoxThrows) {
    Grid g(unit(), 4);
    EXPECT_THROW(quantize_point(g, v1(1.0000001)), DomainError);
    EXPECT_THROW(quantize_point(g, v1(-1e-12)), DomainError);
}

TEST(Grid, CentersAreFixedPoints) {
    StateSpace z(Vector::Constant(3, -1.0), Vector::Constant(3, 2.0));
    Grid g(z, std::vector<int>{3, 5, 2});
    ASSERT_EQ(g.total_points(), 30);
    for (int l = 0; l < g.total_points(); ++l) {
        EXPECT_EQ(quantize_point(g, g.center(l)), l);
        EXPECT_EQ(g.ravel(g.unravel(l)), l);
        for (int i = 0; i < 3; ++i) {
            EXPECT_GT(g.center(l)(i), -1.0);
            EXPECT_LT(g.center(l)(i), 2.0);
        }
    }
    // last coordinate fastest
    EXPECT_EQ(g.unravel(1), (std::vector<int>{0, 0, 1}));
    EXPECT_EQ(g.unravel(2), (std::vector<int>{0, 1, 0}));
}

TEST(Grid, QuantizationErrorWithinHalfCell) {
    StateSpace z(Vector::Constant(2, -1.0), Vector::Constant(2, 3.0));
    Grid g(z, std::vector<int>{7, 3});
    Rng rng(1, kTrialStream);
    for (int k = 0; k < 10000; ++k) {
        Vector x(2);
        x << rng.uniform(-1, 3), rng.uniform(-1, 3);
        Vector e = (g.center(quantize_point(g, x)) - x).cwiseAbs();
        EXPECT_LE(e(0), g.width(0) / 2 + 1e-15);
        EXPECT_LE(e(1), g.width(1) / 2 + 1e-15);
    }
}

TEST(MarginalApproximation, HalfCellBoundAndRefinement) {
    SystemSpec s = make_system(random_walk_params(1));
    Trajectory tr = simulate(s, 200, 17);
    double prev = std::numeric_limits<double>::infinity();
    for (int A : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
        Grid g(s.space, A);
        auto idx = marginal_approximation(g, tr);
        double worst = 0.0;
        for (int t = 0; t <= tr.T(); ++t) worst = std::max(worst, std::abs(g.center(idx[t])(0) - tr.states[t](0)));
        EXPECT_LE(worst, 1.0 / (2 * A));
        EXPECT_LE(worst, prev);
        prev = worst;
        if (A == 1)
            for (int l : idx) EXPECT_EQ(l, 0);
    }
    Grid g1(s.space, 1);
    EXPECT_DOUBLE_EQ(g1.center(0)(0), 0.5);
}

TEST(BuildChain, IdentityKernelGivesIdentityMatrix) {
    ModelParams p = random_walk_params(1);
    p.kernel = "identity";
    SystemSpec s = make_system(p);
    Grid g(s.space, 6);
    for (std::uint64_t seed : {1u, 99u}) {
        QuantizedChain c = build_chain(s, g, BuildMethod::monte_carlo(50), seed);
        EXPECT_EQ(c.transition, Matrix(Matrix::Identity(6, 6)));
    }
}

TEST(BuildChain, UniformKernelRowsAreFlat) {
    ModelParams p = random_walk_params(1);
    p.kernel = "uniform";
    SystemSpec s = make_system(p);
    const int A = 8, n = 20000;
    Grid g(s.space, A);
    QuantizedChain c = build_chain(s, g, BuildMethod::monte_carlo(n), 3);
    for (int k = 0; k < A; ++k) {
        EXPECT_NEAR(c.transition.row(k).sum(), 1.0, 1e-12);
        for (int l = 0; l < A; ++l) EXPECT_NEAR(c.transition(k, l), 1.0 / A, 3.0 * std::sqrt(double(A) / n));
    }
    QuantizedChain q = build_chain(s, g, BuildMethod::quadrature(), 3);
    for (int k = 0; k < A; ++k)
        for (int l = 0; l < A; ++l) EXPECT_NEAR(q.transition(k, l), 1.0 / A, 1e-12);
}

TEST(BuildChain, QuadratureMatchesMonteCarlo) {
    SystemSpec s = make_system(random_walk_params(1));
    Grid g(s.space, 8);
    QuantizedChain q = build_chain(s, g, BuildMethod::quadrature(), 1);
    QuantizedChain m = build_chain(s, g, BuildMethod::monte_carlo(1000000), 1);
    EXPECT_LT((q.transition - m.transition).cwiseAbs().maxCoeff(), 0.005);
    EXPECT_LT((q.initial - m.initial).cwiseAbs().maxCoeff(), 0.005);
    for (int k = 0; k < 8; ++k) {
        EXPECT_NEAR(q.transition.row(k).sum(), 1.0, 1e-12);
        EXPECT_GE(q.transition.row(k).minCoeff(), 0.0);
    }
}

TEST(BuildChain, DensityIntegratesToOne) {
    SystemSpec s = make_system(random_walk_params(1));
    // raw quadrature mass before renormalization, fine grid midpoint rule
    for (double x0 : {0.0, 0.03, 0.5, 1.0}) {
        const int n = 20000;
        double mass = 0.0;
        for (int i = 0; i < n; ++i) mass += s.kernel.density(1, v1(x0), v1((i + 0.5) / n)) / n;
        EXPECT_NEAR(mass, 1.0, 1e-6) << x0;
    }
}

TEST(BuildChain, EscapingMassNamesRow) {
    ModelParams p = random_walk_params(1);
    p.kernel = "uniform";
    SystemSpec s = make_system(p);
    s.kernel.sampler = [](int, std::span<const Vector>, Rng&) { return Vector(Vector::Constant(1, 5.0)); };
    s.kernel.density = [](int, const Vector&, const Vector&) { return 0.0; };
    Grid g(s.space, 4);
    try {
        build_chain(s, g, BuildMethod::quadrature(), 1);
        FAIL() << "expected ConstructionError";
    } catch (const ConstructionError& e) {
        EXPECT_EQ(e.row(), 0);
    }
}

TEST(BuildChain, ExactLawRequiresMatchingGrid) {
    SystemSpec s = make_system(finite_params(4, 1, 3));
    Grid g(s.space, 4);
    QuantizedChain c = build_chain(s, g, BuildMethod::exact(), 0);
    EXPECT_LT((c.transition - s.finite_law->transition).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(auto_method(s, g, 100).kind, BuildMethod::Kind::kExact);
    EXPECT_THROW(build_chain(s, Grid(s.space, 8), BuildMethod::exact(), 0), Error);
}

TEST(ChainCsv, RoundTrip) {
    SystemSpec s = make_system(random_walk_params(1));
    Grid g(s.space, 5);
    QuantizedChain c = build_chain(s, g, BuildMethod::quadrature(4), 1);
    std::stringstream ss;
    write_chain_csv(ss, c);
    EXPECT_NE(ss.str().find("A=5"), std::string::npos);
    QuantizedChain r = read_chain_csv(ss);
    EXPECT_EQ(r.transition, c.transition);
    EXPECT_EQ(r.initial, c.initial);
    EXPECT_EQ(r.grid.total_points(), 5);
}

TEST(CWeak, IdentityWithinHalfCell) {
    SystemSpec s = make_system(random_walk_params(1));
    Trajectory tr = simulate(s, 100, 8);
    auto id = [](const Vector& x) { return x(0); };
    auto lip = [](double d) { return d; };
    CWeakResult r = cweak_diagnostic(Grid(s.space, 100), tr, id, lip);
    EXPECT_LE(r.max_deviation, 0.005);
    EXPECT_LE(r.max_deviation, r.modulus_bound);
}

TEST(CWeak, ConstantFunctionZero) {
    SystemSpec s = make_system(random_walk_params(1));
    Trajectory tr = simulate(s, 100, 8);
    CWeakResult r = cweak_diagnostic(Grid(s.space, 3), tr, [](const Vector&) { return 4.2; }, [](double) { return 0.0; });
    EXPECT_EQ(r.max_deviation, 0.0);
}

TEST(CWeak, SineDeviationNonincreasing) {
    SystemSpec s = make_system(random_walk_params(1));
    Trajectory tr = simulate(s, 100, 8);
    auto f = [](const Vector& x) { return std::sin(M_PI * x(0)); };
    auto mod = [](double d) { return M_PI * d; };
    double prev = std::numeric_limits<double>::infinity();
    for (int A : {8, 16, 32}) {
        CWeakResult r = cweak_diagnostic(Grid(s.space, A), tr, f, mod);
        EXPECT_LE(r.max_deviation, prev);
        EXPECT_LE(r.max_deviation, r.modulus_bound);
        prev = r.max_deviation;
    }
}
