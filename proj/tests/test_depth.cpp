#include "geodepth/depth.hpp"
#include "geodepth/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace geodepth;

namespace {

Dataset cross() { return Dataset::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}); }
Dataset five() { return Dataset::from_rows({{0, 0}, {4, 0}, {0, 4}, {4, 4}, {1, 1}}); }

Vector vec(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

// min over directions of Φ̄(⟨h,x⟩/√(hᵀΣh)): 2^14 grid angles plus golden-section refinement
double gaussian_grid_depth(double s0, double s1, const Vector& x) {
    const double pi = 3.14159265358979323846;
    auto f = [&](double phi) {
        const double h0 = std::cos(phi), h1 = std::sin(phi);
        return 0.5 * std::erfc((h0 * x(0) + h1 * x(1)) / std::sqrt(2.0 * (h0 * h0 * s0 + h1 * h1 * s1)));
    };
    const int nodes = 1 << 14;
    const double step = 2 * pi / nodes;
    double best = 1.0, arg = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double v = f(step * k);
        if (v < best) {
            best = v;
            arg = step * k;
        }
    }
    double a = arg - step, b = arg + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) < f(d)) b = d;
        else a = c;
    }
    return std::min(best, f(0.5 * (a + b)));
}

}  // namespace

TEST(DepthExact, Fixtures) {
    auto v = depth_exact_2d(cross(), vec(0, 0));
    EXPECT_EQ(v.fraction(), "2/4");
    EXPECT_EQ(v.reduced_fraction(), "1/2");
    v = depth_exact_2d(five(), vec(1, 1));
    EXPECT_EQ(v.fraction(), "2/5");
    EXPECT_EQ(oracle::brute_depth_2d(five(), vec(1, 1)).count, 2);
    v = depth_exact_2d(five(), vec(100, -3));
    EXPECT_EQ(v.k, 0);
    EXPECT_EQ(v.value, 0.0);
}

TEST(DepthExact, Degenerate) {
    EXPECT_EQ(depth_exact_2d(Dataset::from_rows({{2, 2}, {2, 2}, {2, 2}}), vec(2, 2)).k, 3);
    EXPECT_EQ(depth_exact_2d(Dataset::from_rows({{0, 0}, {1, 1}, {2, 2}}), vec(1, 1)).k, 2);
    EXPECT_EQ(depth_exact_2d(Dataset::from_rows({{0, 0}, {1, 1}, {2, 2}}), vec(1, 0)).k, 0);
    EXPECT_EQ(depth_exact_2d(Dataset::from_rows({}, 2), vec(0, 0)).n, 0);
    EXPECT_THROW(depth_exact_2d(Dataset::from_rows({{1, 2, 3}}), Vector::Zero(3)), DimensionError);
}

TEST(DepthExact, MatchesBruteForceOnRandomInstances) {
    Pcg64 g(RngSpec{2024, 0});
    for (int inst = 0; inst < 200; ++inst) {
        const auto n = static_cast<Eigen::Index>(1 + (g() % 50));
        Matrix pts(2, n);
        const bool gridded = inst % 2 == 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j)
                pts(j, i) = gridded ? static_cast<double>(g() % 7) - 3.0 : 3.0 * g.normal();
        const Dataset d(pts);
        Vector x(2);
        if (inst % 3 == 0) x = d.point(static_cast<Eigen::Index>(g() % static_cast<std::uint64_t>(n)));
        else if (gridded) x << static_cast<double>(g() % 7) - 3.0, static_cast<double>(g() % 7) - 3.0;
        else x << g.normal(), g.normal();
        const auto exact = depth_exact_2d(d, x);
        const auto brute = oracle::brute_depth_2d(d, x);
        ASSERT_EQ(exact.k, brute.count) << "instance " << inst;
        ASSERT_EQ(exact.n, brute.n);
    }
}

TEST(DepthExact, PrefixMonotoneCounts) {
    const Dataset d = sample(DistributionSpec::gaussian({1, 1}), 2000, RngSpec{6, 0});
    const Vector x = vec(0.4, -0.2);
    Eigen::Index prev = 0;
    for (Eigen::Index m = 100; m <= 2000; m += 100) {
        const auto k = depth_exact_2d(d.prefix(m), x).k;
        EXPECT_GE(k, prev);
        prev = k;
    }
}

TEST(DepthExact, OrthogonalInvariance) {
    const Dataset d = sample(DistributionSpec::pareto(2, 2.5), 500, RngSpec{12, 0});
    const Vector x = vec(1.5, 1.3);
    Matrix r(2, 2);
    const double phi = 0.7;
    r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    EXPECT_EQ(depth_exact_2d(d, x).k, depth_exact_2d(d.transformed(r), Vector(r * x)).k);
}

TEST(DepthApprox, UpperBoundsExact) {
    Pcg64 g(RngSpec{99, 0});
    for (std::uint64_t s = 0; s < 30; ++s) {
        const Dataset d = sample(DistributionSpec::gaussian({1, 2}), 60, RngSpec{s, 0});
        const Vector x = vec(0.5 * g.normal(), 0.5 * g.normal());
        const auto a = depth_approx(d, x, 50, RngSpec{s, 1});
        const auto e = depth_exact_2d(d, x);
        EXPECT_GE(a.k, e.k);
        EXPECT_EQ(a.directions_used, 50u);
    }
}

TEST(DepthApprox, FivePointFixture) {
    EXPECT_EQ(depth_approx(five(), vec(1, 1), 10000, RngSpec{1, 0}).fraction(), "2/5");
}

TEST(DepthApprox, UnivariateIsExact) {
    const Dataset d = Dataset::from_rows({{-2}, {0.5}, {1}, {3}, {4}, {1}});
    Vector x(1);
    for (double v : {-3.0, 0.5, 1.0, 2.0, 5.0}) {
        x << v;
        Eigen::Index ge = 0, le = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            ge += d.point(i)(0) >= v;
            le += d.point(i)(0) <= v;
        }
        EXPECT_EQ(depth_approx(d, x, 2, RngSpec{3, 0}).k, std::min(ge, le));
    }
}

TEST(DepthApprox, DefaultDirectionCount) {
    EXPECT_EQ(default_direction_count(2, 100000), 5000u);
    EXPECT_EQ(default_direction_count(3, 100), 300u);
}

TEST(PopulationDepthGaussian, Examples) {
    EXPECT_DOUBLE_EQ(population_depth_gaussian({1, 1}, vec(0, 0)).value, 0.5);
    const Vector x = 2.757 * UnitDirection::normalize(vec(1, 1)).coords();
    const double v = population_depth_gaussian({2, 2}, x).value;
    EXPECT_NEAR(v, 0.5 * std::erfc(2.757 / std::sqrt(2.0) / std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(v, 0.0256, 1e-4);
}

TEST(PopulationDepthGaussian, MatchesDirectionGrid) {
    Pcg64 g(RngSpec{314, 0});
    for (int trial = 0; trial < 20; ++trial) {
        const double s0 = 0.2 + 4.0 * g.uniform_open(), s1 = 0.2 + 4.0 * g.uniform_open();
        const Vector x = vec(2.0 * g.normal(), 2.0 * g.normal());
        EXPECT_NEAR(population_depth_gaussian({s0, s1}, x).value, gaussian_grid_depth(s0, s1, x), 1e-6);
    }
}

TEST(PopulationDepthProduct, AgreesWithClosedForm) {
    for (double t : {0.5, 1.5, 2.757}) {
        const Vector x = t * UnitDirection::normalize(vec(1, 1)).coords();
        const auto num = population_depth_product(DistributionSpec::gaussian({2, 2}), x);
        const double closed = population_depth_gaussian({2, 2}, x).value;
        EXPECT_LE(std::abs(num.value - closed), std::max(3 * num.stderr_estimate, 1e-6));
    }
}

TEST(PopulationDepthProduct, SymmetricCenter) {
    const auto v = population_depth_product(DistributionSpec::gaussian({1, 3}), vec(0, 0));
    EXPECT_NEAR(v.value, 0.5, 2 * v.stderr_estimate + 1e-9);
}

TEST(PopulationDepthProduct, ParetoBaseline) {
    const Vector x = 1.81 * UnitDirection::normalize(vec(1, 1)).coords();
    const auto q = population_depth_product(DistributionSpec::pareto(2, 3.2), x);
    EXPECT_NEAR(q.value, 0.434247, 2e-5);
    ProductDepthOptions mc;
    mc.method = ProjectionMethod::monte_carlo;
    const auto m = population_depth_product(DistributionSpec::pareto(2, 3.2), x, mc);
    EXPECT_LE(std::abs(m.value - q.value), 4 * m.stderr_estimate);
}

TEST(PopulationDepthProduct, SphericalUnsupported) {
    EXPECT_THROW(population_depth_product(DistributionSpec::spherical_exponential(2), vec(0, 0)), PreconditionError);
}

TEST(MarginalBound, Examples) {
    std::vector<Marginal> g{Marginal::gaussian(1), Marginal::gaussian(1)};
    EXPECT_NEAR(marginal_survival_bound(g, vec(1, 1), 2.0), 0.02275, 1e-5);
    std::vector<Marginal> p{Marginal::pareto(3.2), Marginal::pareto(3.2)};
    EXPECT_NEAR(marginal_survival_bound(p, vec(1, 1), 2.0), std::pow(2.0, -3.2), 1e-15);
    // survival underflows to exactly 0 far in the gaussian tail
    EXPECT_EQ(marginal_survival_bound(g, vec(1, 100), 2.0), 0.0);
    EXPECT_THROW(marginal_survival_bound(g, vec(1, 1), 0.0), PreconditionError);
}

TEST(MarginalBound, DominatesPopulationDepth) {
    for (double t : {1.0, 2.0, 3.0}) {
        const Vector x = UnitDirection::normalize(vec(1, 2)).coords();
        const double bound = marginal_survival_bound(marginals_of(DistributionSpec::pareto(2, 2.2)), x, t);
        EXPECT_LE(population_depth_product(DistributionSpec::pareto(2, 2.2), Vector(t * x)).value, bound + 1e-9);
    }
}

TEST(MarginalBound, EmpiricalCountDominatesDepth) {
    const Dataset d = sample(DistributionSpec::pareto(2, 1.9), 3000, RngSpec{5, 0});
    for (double t : {1.5, 3.0, 6.0}) {
        const Vector y = t * UnitDirection::normalize(vec(1, 1)).coords();
        EXPECT_LE(depth_exact_2d(d, y).k, empirical_marginal_survival_count(d, y));
    }
}

TEST(Marginal, QuantileInvertsCdf) {
    for (const auto& m : {Marginal::gaussian(2.0), Marginal::pareto(2.2, 1.5, -0.3)}) {
        for (double p : {0.01, 0.3, 0.5, 0.9, 0.999}) {
            EXPECT_NEAR(m.cdf(m.quantile(p)), p, 1e-12);
            EXPECT_NEAR(m.survival(m.upper_quantile(1 - p)), 1 - p, 1e-12);
        }
    }
}
