#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "besi/error.hpp"
#include "besi/evaluation.hpp"
#include "besi/rng.hpp"

using namespace besi;

namespace {

Matrix random_points(Rng& rng, Index k, double scale = 30.0) {
    Matrix p(k, 3);
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-scale, scale);
    return p;
}

MassDistribution random_distribution(Rng& rng, Index k) {
    Vector w(k);
    for (Index i = 0; i < k; ++i) w[i] = rng.uniform(0.01, 1.0);
    return MassDistribution::from_weights(random_points(rng, k), w);
}

// For equal uniform masses the optimal plan is a permutation (Birkhoff).
double emd_by_permutation(const Matrix& a, const Matrix& b) {
    std::vector<Index> perm(static_cast<std::size_t>(a.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Index i = 0; i < a.rows(); ++i) cost += (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm();
        best = std::min(best, cost / static_cast<double>(a.rows()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

SourceSpace line_space(Index n, Index d) {
    Matrix pos = Matrix::Zero(n, 3);
    Vector depth(n);
    Matrix orient(n * d, 3);
    for (Index k = 0; k < n; ++k) {
        pos(k, 0) = static_cast<double>(k);
        depth[k] = static_cast<double>(k);
        orient.middleRows(k * d, d) = Matrix::Identity(d, 3);
    }
    return SourceSpace(pos, depth, orient, d);
}

}  // namespace

TEST(Emd, IdenticalDistributionsAreZero) {
    Rng rng(1);
    const auto a = random_distribution(rng, 7);
    EXPECT_NEAR(emd(a, a), 0.0, 1e-12);
}

TEST(Emd, SingleAtomShift) {
    const Eigen::Vector3d p(1, 2, 3);
    EXPECT_NEAR(emd(MassDistribution::atom(p), MassDistribution::atom(p + Eigen::Vector3d(5, 0, 0))), 5.0, 1e-12);
}

TEST(Emd, SingleTruthHandExample) {
    Matrix sup(2, 3);
    sup << 2, 0, 0, 0, 4, 0;
    const auto est = MassDistribution::from_weights(sup, Vector(Eigen::Vector2d(0.25, 0.75)));
    EXPECT_DOUBLE_EQ(emd_single_truth(est, Eigen::Vector3d::Zero()), 3.5);
    EXPECT_NEAR(emd(est, MassDistribution::atom(Eigen::Vector3d::Zero())), 3.5, 1e-12);
}

TEST(Emd, SingleTruthTrivialCases) {
    const Eigen::Vector3d t(3, 3, 3);
    EXPECT_EQ(emd_single_truth(MassDistribution::atom(t), t), 0.0);
    Matrix sup(2, 3);
    sup << 4, 3, 3, 3, 0, 3;
    EXPECT_DOUBLE_EQ(emd_single_truth(MassDistribution::from_weights(sup, Vector::Ones(2)), t), 2.0);
}

TEST(Emd, MatchesPermutationOracle) {
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
        const Index k = 2 + static_cast<Index>(rng.uniform() * 5);
        const Matrix a = random_points(rng, k), b = random_points(rng, k);
        const auto da = MassDistribution::from_weights(a, Vector::Ones(k));
        const auto db = MassDistribution::from_weights(b, Vector::Ones(k));
        EXPECT_NEAR(emd(da, db), emd_by_permutation(a, b), 1e-9) << "case " << t;
    }
}

TEST(Emd, LpMatchesSingleTruthClosedForm) {
    Rng rng(3);
    const auto est = random_distribution(rng, 50);
    const Eigen::Vector3d truth(1, -2, 5);
    EXPECT_NEAR(emd(est, MassDistribution::atom(truth)), emd_single_truth(est, truth), 1e-9);
}

TEST(Emd, MetricAxioms) {
    Rng rng(4);
    for (int t = 0; t < 30; ++t) {
        const auto a = random_distribution(rng, 1 + static_cast<Index>(rng.uniform() * 8));
        const auto b = random_distribution(rng, 1 + static_cast<Index>(rng.uniform() * 8));
        const auto c = random_distribution(rng, 1 + static_cast<Index>(rng.uniform() * 8));
        const double ab = emd(a, b), ba = emd(b, a), bc = emd(b, c), ac = emd(a, c);
        EXPECT_GE(ab, 0.0);
        EXPECT_NEAR(ab, ba, 1e-9 * std::max(1.0, ab));
        EXPECT_LE(ac, ab + bc + 1e-9);
    }
}

TEST(Emd, RejectsInvalidMass) {
    MassDistribution bad;
    bad.support = Matrix::Zero(1, 3);
    bad.masses = Vector::Constant(1, 0.5);
    EXPECT_THROW(emd(bad, MassDistribution::atom(Eigen::Vector3d::Zero())), ConstraintError);
}

TEST(MassDistribution, FromEstimateNormalizesAndThresholds) {
    Vector c = Vector::Zero(9);
    c.segment(0, 3) << 3, 4, 0;  // amplitude 5
    c[4] = 1e-12;                 // below the relative threshold
    c.segment(6, 3) << 0, 0, 15;
    const auto m = MassDistribution::from_estimate(SourceEstimate(c, 3), line_space(3, 3));
    ASSERT_EQ(m.size(), 2);
    EXPECT_DOUBLE_EQ(m.masses.sum(), 1.0);
    EXPECT_DOUBLE_EQ(m.masses[0], 0.25);
    const auto sq = MassDistribution::from_estimate(SourceEstimate(c, 3), line_space(3, 3), true);
    EXPECT_DOUBLE_EQ(sq.masses[0], 0.1);
    EXPECT_THROW(MassDistribution::from_estimate(SourceEstimate(Vector::Zero(9), 3), line_space(3, 3)),
                 DegenerateInputError);
}

TEST(DepthOfMax, TieGoesToLowestIndex) {
    const auto space = line_space(6, 1);
    Vector depth(6);
    depth << 0, 0, 3, 0, 0, 7;
    const SourceSpace s(space.positions(), depth, space.orientation(), 1);
    Vector c = Vector::Zero(6);
    c[2] = 2.0;
    c[5] = -2.0;
    EXPECT_EQ(depth_of_max(SourceEstimate(c, 1), s), 3.0);
    c[2] = 0.0;
    EXPECT_EQ(depth_of_max(SourceEstimate(c, 1), s), 7.0);
    EXPECT_THROW(depth_of_max(SourceEstimate(Vector::Zero(6), 1), s), DegenerateInputError);
}

TEST(DepthErrorBins, HandBinning) {
    EXPECT_EQ(depth_error_bin(0.0), 5u);
    EXPECT_EQ(depth_error_bin(1.0), 5u);
    EXPECT_EQ(depth_error_bin(1.0001), 4u);
    EXPECT_EQ(depth_error_bin(20.0), 1u);
    EXPECT_EQ(depth_error_bin(20.5), 0u);
    const auto t = depth_error_bins({{"a", 0.5}, {"a", 3.0}, {"a", 12.0}, {"b", 0.0}});
    const auto& pa = t.percent.at("a");
    EXPECT_NEAR(pa[5], 100.0 / 3, 1e-12);
    EXPECT_NEAR(pa[4], 100.0 / 3, 1e-12);
    EXPECT_NEAR(pa[2], 100.0 / 3, 1e-12);
    EXPECT_EQ(t.percent.at("b")[5], 100.0);
    EXPECT_EQ(t.count.at("a"), 3u);
}

TEST(Summary, QuantileConvention) {
    const auto s = summarize({4, 1, 3, 2});
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    // h = (n - 1) p: q1 at 0.75 -> 1.75, q3 at 2.25 -> 3.25
    EXPECT_DOUBLE_EQ(s.iqr, 1.5);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Summary, DegenerateLists) {
    const auto c = summarize({2, 2, 2});
    EXPECT_EQ(c.std, 0.0);
    EXPECT_EQ(c.iqr, 0.0);
    const auto one = summarize({7});
    EXPECT_EQ(one.std, 0.0);
    EXPECT_EQ(one.iqr, 0.0);
    EXPECT_EQ(one.median, 7.0);
    EXPECT_THROW(summarize({}), ConstraintError);
}

TEST(Regression, ExactAndConstant) {
    const std::vector<double> x = {1, 5, 9, 13, 20};
    const auto r = depth_regression(x, x);
    EXPECT_NEAR(r.slope, 1.0, 1e-14);
    EXPECT_NEAR(r.intercept, 0.0, 1e-12);
    const auto c = depth_regression(x, {4, 4, 4, 4, 4});
    EXPECT_NEAR(c.slope, 0.0, 1e-15);
}

TEST(Regression, NoisyLineRecoversSlope) {
    Rng rng(5);
    std::vector<double> x, y;
    for (int i = 0; i < 300; ++i) {
        x.push_back(rng.uniform(0, 30));
        y.push_back(0.5 * x.back() + 2.0 + 0.01 * rng.normal());
    }
    const auto r = depth_regression(x, y);
    EXPECT_NEAR(r.slope, 0.5, 0.01);
    EXPECT_NEAR(r.intercept, 2.0, 0.01);
    EXPECT_LT(r.slope_ci_low, 0.5);
    EXPECT_GT(r.slope_ci_high, 0.5);
    EXPECT_NEAR(r.slope_ci_high - r.slope, 1.96 * r.slope_se, 1e-15);
}
