#include "geodepth/oracle.hpp"
#include "geodepth/quantile.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace geodepth;

namespace {

Dataset cross() { return Dataset::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}); }
Dataset triangle() { return Dataset::from_rows({{0, 0}, {2, 0}, {0, 2}}); }

Vector vec(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Matrix rotation(double phi) {
    Matrix r(2, 2);
    r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return r;
}

}  // namespace

TEST(Objective, Examples) {
    EXPECT_EQ(objective(triangle(), vec(0.3, 0), vec(0, 0)), 0.0);
    EXPECT_EQ(objective(Dataset::from_rows({{1, 0}, {-1, 0}}), vec(0, 0), vec(0, 0)), 0.0);
    const double expected = (1.0 + (1.0 - 2.0) + (std::sqrt(5.0) - 2.0)) / 3.0 - 0.3;
    EXPECT_NEAR(objective(triangle(), vec(0.3, 0), vec(1, 0)), expected, 1e-15);
    EXPECT_NEAR(objective(triangle(), vec(0.3, 0), vec(1, 0)), -0.2213, 1e-4);
}

TEST(Objective, SegmentMinimum) {
    const Dataset seg = Dataset::from_rows({{1, 0}, {-1, 0}});
    for (double s = -1.0; s <= 1.0; s += 0.125) EXPECT_GE(objective(seg, vec(0, 0), vec(s, 0)), -1e-15);
}

TEST(Residual, Examples) {
    auto r = residual(cross(), vec(0, 0));
    EXPECT_NEAR(r.r.norm(), 0.0, 1e-15);
    EXPECT_EQ(r.atoms, 0);
    r = residual(Dataset::from_rows({{5, 5}}), vec(5, 5));
    EXPECT_EQ(r.r.norm(), 0.0);
    EXPECT_EQ(r.atoms, 1);
    r = residual(Dataset::from_rows({{0, 0}, {2, 0}}), vec(1, 1));
    EXPECT_NEAR(r.r(0), 0.0, 1e-15);
    EXPECT_NEAR(r.r(1), 1 / std::sqrt(2.0), 1e-15);
}

TEST(Solve, CrossSpatialMedian) {
    const auto s = solve(cross(), vec(0, 0));
    EXPECT_TRUE(s.converged);
    EXPECT_LE(s.q.norm(), 1e-8);
}

TEST(Solve, TriangleMatchesBruteForce) {
    const auto s = solve(triangle(), vec(0.3, 0), 1e-8, 10000);
    ASSERT_TRUE(s.converged);
    EXPECT_TRUE(s.satisfies_characterization(1e-8));
    const auto b = oracle::brute_quantile(triangle(), vec(0.3, 0));
    EXPECT_LE((s.q - b.point).norm(), 1e-3);
    EXPECT_LE(s.objective_value, b.objective + 1e-12);
}

TEST(Solve, IndexVectorOnSphereRejected) {
    try {
        solve(cross(), vec(1, 0));
        FAIL();
    } catch (const PreconditionError& e) {
        EXPECT_STREQ(e.what(), "index vector must satisfy ‖u‖<1");
    }
    EXPECT_THROW(solve(cross(), vec(0.8, 0.8)), PreconditionError);
}

TEST(Solve, DimensionMismatch) {
    Vector u = Vector::Zero(3);
    EXPECT_THROW(solve(cross(), u), DimensionError);
}

TEST(Solve, AtomSolution) {
    // the median of an odd collinear sample sits on the middle point
    const Dataset d = Dataset::from_rows({{0, 0}, {1, 0}, {5, 0}});
    const auto s = solve(d, vec(0, 0));
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR((s.q - vec(1, 0)).norm(), 0.0, 1e-9);
    EXPECT_EQ(s.atom_hits, 1);
    EXPECT_TRUE(s.non_unique);
    EXPECT_TRUE(s.satisfies_characterization(1e-8));
}

TEST(Solve, ObjectiveTraceNonIncreasing) {
    const Dataset d = sample(DistributionSpec::pareto(2, 2.2), 5000, RngSpec{3, 0});
    std::vector<double> trace;
    SolverOptions opt;
    opt.objective_trace = &trace;
    const auto s = solve(d, vec(0.7, 0.69), opt);
    ASSERT_TRUE(s.converged);
    ASSERT_GE(trace.size(), 2u);
    // non-increasing up to the objective's rounding floor
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-14 * (1 + std::abs(trace[i - 1])));
    EXPECT_LT(trace.back(), trace.front());
}

TEST(Solve, MaxIterReportsNonConvergence) {
    const Dataset d = sample(DistributionSpec::gaussian({1, 1}), 1000, RngSpec{3, 0});
    const auto s = solve(d, vec(0.7, 0.7), 1e-14, 1);
    EXPECT_FALSE(s.converged);
}

TEST(Solve, ExtremeLevelConverges) {
    const Dataset d = sample(DistributionSpec::gaussian({1, 1}), 100000, RngSpec{8, 0});
    const double a = 1.0 - 1e-6;
    const auto s = solve(d, Vector(a * UnitDirection::normalize(vec(1, 1)).coords()), 1e-10, 10000);
    EXPECT_TRUE(s.converged);
    EXPECT_TRUE(s.satisfies_characterization(1e-10));
    EXPECT_LE(s.q.norm(), growth_bound(d, a).bound);
}

TEST(Equivariance, TranslationScalingRotation) {
    const double tol = 1e-9;
    Pcg64 g(RngSpec{77, 0});
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset d = sample(DistributionSpec::gaussian({1, 3}), 40, RngSpec{static_cast<std::uint64_t>(trial), 0});
        const Vector u = g.unit_vector(2) * (0.9 * g.uniform_open());
        const auto base = solve(d, u, tol, 10000);
        ASSERT_TRUE(base.converged);

        const Vector c = 10.0 * g.unit_vector(2);
        const auto shifted = solve(d.translated(c), u, tol, 10000);
        EXPECT_LE((shifted.q - (base.q + c)).norm(), 2 * tol * (1 + c.norm()));

        const double lambda = 0.1 + 5.0 * g.uniform_open();
        const auto scaled = solve(d.scaled(lambda), u, tol, 10000);
        EXPECT_LE((scaled.q - lambda * base.q).norm(), 2 * tol * lambda * (1 + base.q.norm()));

        const Matrix r = rotation(6.283185307179586 * g.uniform_open());
        const auto rotated = solve(d.transformed(r), Vector(r * u), tol, 10000);
        EXPECT_LE((rotated.q - r * base.q).norm(), 2 * tol * (1 + base.q.norm()));
    }
}

TEST(GrowthBound, Construction) {
    const Dataset d = Dataset::from_rows({{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}, {7, 0}, {8, 0}, {9, 0}, {10, 0}});
    const auto g = growth_bound(d, 0.5);
    EXPECT_DOUBLE_EQ(g.delta, 0.1);
    EXPECT_DOUBLE_EQ(g.radius, 9.0);
    EXPECT_DOUBLE_EQ(g.m, 0.7 / 0.1 + 1.0);
    EXPECT_DOUBLE_EQ(g.bound, (g.m + 2.0) * 9.0);
    EXPECT_THROW(growth_bound(d, 1.0), PreconditionError);
}

TEST(ExpansionLimits, SphericalSymmetry) {
    const auto u = UnitDirection::normalize(vec(0.3, -2));
    const auto lim = expansion_limits(DistributionSpec::gaussian({1, 1}), u);
    EXPECT_NEAR(lim.first_order_shift.norm(), 0.0, 1e-15);
    EXPECT_NEAR(lim.second_order_vector.norm(), 0.0, 1e-15);
    EXPECT_NEAR(lim.magnitude_limit, 0.5, 1e-15);
    ASSERT_TRUE(lim.third_order_limit.has_value());
    EXPECT_NEAR(*lim.third_order_limit, 0.0, 1e-15);
}

TEST(ExpansionLimits, TriangleHandValues) {
    const auto lim = expansion_limits(triangle(), UnitDirection::basis(2, 0));
    EXPECT_NEAR(lim.first_order_shift(0), 0.0, 1e-15);
    EXPECT_NEAR(lim.first_order_shift(1), 2.0 / 3, 1e-15);
    EXPECT_NEAR(lim.magnitude_limit, 4.0 / 9, 1e-15);
}

TEST(ExpansionLimits, ThirdOrderNeedsThreeMoments) {
    const auto u = UnitDirection::basis(2, 0);
    EXPECT_FALSE(expansion_limits(DistributionSpec::pareto(2, 2.5), u).third_order_limit.has_value());
    EXPECT_TRUE(expansion_limits(DistributionSpec::pareto(2, 3.5), u).third_order_limit.has_value());
}

TEST(ExpansionLimits, SampleConvergesToPopulation) {
    const auto spec = DistributionSpec::pareto(2, 4.5);
    const auto u = UnitDirection::normalize(vec(1, 2));
    const auto pop = expansion_limits(spec, u);
    const auto emp = expansion_limits(sample(spec, 400000, RngSpec{5, 0}), u);
    EXPECT_NEAR(emp.magnitude_limit, pop.magnitude_limit, 0.05 * pop.magnitude_limit);
    EXPECT_NEAR((emp.first_order_shift - pop.first_order_shift).norm(), 0.0, 0.01);
    EXPECT_NEAR(*emp.third_order_limit, *pop.third_order_limit, 0.1 * std::abs(*pop.third_order_limit) + 0.05);
}

TEST(FirstOrderResidual, CrossSymmetry) {
    const Vector r = first_order_residual(cross(), UnitDirection::basis(2, 0), 0.5);
    EXPECT_NEAR(r(1), 0.0, 1e-8);
}

TEST(FirstOrderResidual, CauchySchwarzIdentity) {
    const Dataset d = sample(DistributionSpec::pareto(2, 2.5), 2000, RngSpec{1, 0});
    const auto u = UnitDirection::normalize(vec(1, -0.4));
    const double alpha = 0.95;
    const auto s = solve(d, Vector(alpha * u.coords()));
    const Vector mean = d.matrix().rowwise().mean();
    const Vector mean_orth = mean - mean.dot(u.coords()) * u.coords();
    const Vector r = first_order_residual(d, u, alpha);
    EXPECT_NEAR((r + mean_orth).dot(u.coords()), s.q.dot(u.coords()) - s.q.norm(), 1e-9);
    EXPECT_LE((r + mean_orth).dot(u.coords()), 1e-12);
}

TEST(FirstOrderResidual, GaussianExtremeLevelSmall) {
    std::vector<double> norms;
    const auto u = UnitDirection::normalize(vec(1, 1));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = sample(DistributionSpec::gaussian({1, 1}), 100000, RngSpec{seed, 0});
        norms.push_back(first_order_residual(d, u, 0.99).norm());
    }
    std::nth_element(norms.begin(), norms.begin() + 5, norms.end());
    EXPECT_LT(norms[5], 0.2);
}
