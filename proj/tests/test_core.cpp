#include "geodepth/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace geodepth;

namespace {

Dataset cross() { return Dataset::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}); }

}  // namespace

TEST(UnitDirection, RejectsNonUnit) {
    EXPECT_THROW(UnitDirection(Vector::Constant(2, 1.0)), PreconditionError);
    EXPECT_THROW(UnitDirection::normalize(Vector::Zero(2)), PreconditionError);
    const auto u = UnitDirection::normalize(Vector::Constant(2, 3.0));
    EXPECT_NEAR(u(0), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(u.coords().norm(), 1.0, 1e-15);
}

TEST(Dataset, FromRowsChecksShape) {
    EXPECT_THROW(Dataset::from_rows({{1, 2}, {3}}), DimensionError);
    EXPECT_THROW(Dataset::from_rows({}), DimensionError);
    EXPECT_EQ(Dataset::from_rows({}, 2).size(), 0);
    EXPECT_THROW(Dataset::from_rows({{1, NAN}}), PreconditionError);
}

TEST(Dataset, PrefixAndTransforms) {
    const Dataset d = Dataset::from_rows({{1, 2}, {3, 4}, {5, 6}});
    EXPECT_EQ(d.prefix(2).size(), 2);
    EXPECT_EQ(d.prefix(2).point(1), d.point(1));
    EXPECT_THROW(d.prefix(4), PreconditionError);
    Vector c(2);
    c << 10, -1;
    EXPECT_DOUBLE_EQ(d.translated(c).point(2)(0), 15.0);
    EXPECT_DOUBLE_EQ(d.scaled(2.0).point(0)(1), 4.0);
}

TEST(Moments, SymmetricCross) {
    const Moments m = sample_moments(cross());
    EXPECT_NEAR(m.mean.norm(), 0.0, 1e-15);
    EXPECT_NEAR(m.covariance(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(m.covariance(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(m.covariance(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(m.trace, 1.0, 1e-15);
}

TEST(Moments, RepeatedPointIsDegenerate) {
    const Moments m = sample_moments(Dataset::from_rows({{2.5, 2.5}, {2.5, 2.5}, {2.5, 2.5}}));
    EXPECT_EQ(m.covariance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Moments, ThreePointHandComputation) {
    const Moments m = sample_moments(Dataset::from_rows({{0, 0}, {2, 0}, {0, 2}}));
    EXPECT_NEAR(m.mean(0), 2.0 / 3, 1e-15);
    EXPECT_NEAR(m.mean(1), 2.0 / 3, 1e-15);
    EXPECT_NEAR(m.covariance(0, 0), 8.0 / 9, 1e-15);
    EXPECT_NEAR(m.covariance(1, 1), 8.0 / 9, 1e-15);
    EXPECT_NEAR(m.covariance(0, 1), -4.0 / 9, 1e-15);
    EXPECT_NEAR(m.covariance(1, 0), -4.0 / 9, 1e-15);
}

TEST(Project, Examples) {
    auto p = project(Dataset::from_rows({{3, 7}, {-1, 2}}), UnitDirection::basis(2, 0));
    EXPECT_EQ(p, (std::vector<double>{3, -1}));
    p = project(Dataset::from_rows({{1, 1}}), UnitDirection::normalize(Vector::Constant(2, 1.0)));
    EXPECT_NEAR(p[0], std::sqrt(2.0), 1e-15);
    Vector h(2);
    h << 0.6, 0.8;
    p = project(Dataset::from_rows({{5, -5}}), UnitDirection(h));
    EXPECT_NEAR(p[0], -1.0, 1e-14);
}

TEST(Pcg64, DeterministicPerSeedAndStream) {
    Pcg64 a(RngSpec{42, 7}), b(RngSpec{42, 7}), c(RngSpec{42, 8}), d(RngSpec{43, 7});
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        if (i == 0) {
            firsts.insert(x);
            firsts.insert(c());
            firsts.insert(d());
        }
    }
    EXPECT_EQ(firsts.size(), 3u);
}

TEST(Pcg64, UniformOpenAndNormalMoments) {
    Pcg64 g(RngSpec{1, 0});
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform_open();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double z = g.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Pcg64, UnitVector) {
    Pcg64 g(RngSpec{5, 1});
    for (int i = 0; i < 100; ++i) EXPECT_NEAR(g.unit_vector(3).norm(), 1.0, 1e-14);
}

TEST(HashCombine, OrderSensitive) {
    EXPECT_NE(hash_combine({1, 2}), hash_combine({2, 1}));
    EXPECT_EQ(hash_combine({1, 2, 3}), hash_combine({1, 2, 3}));
}

TEST(ParallelFor, VisitsEveryIndexAndRethrows) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw ConvergenceError("boom");
                 }),
                 ConvergenceError);
}
