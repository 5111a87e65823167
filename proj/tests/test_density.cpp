#include <dds/density.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace dds;

namespace {

    FeatureVector pt(double x, double y)
    {
        FeatureVector v(2);
        v << x, y;
        return v;
    }

    std::vector<std::size_t> order_by(const std::vector<double>& v, bool descending)
    {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return descending ? v[a] > v[b] : v[a] < v[b]; });
        return idx;
    }

} // namespace

TEST(Kernel, BoundedInUnitInterval)
{
    for (auto kind : {KernelKind::gaussian, KernelKind::triangular}) {
        const Kernel k{kind};
        EXPECT_EQ(k(0.), 1.);
        for (double u = 0.; u < 20.; u += 0.01) {
            EXPECT_GE(k(u), 0.);
            EXPECT_LE(k(u), 1.);
        }
    }
    EXPECT_DOUBLE_EQ(Kernel{KernelKind::gaussian}(1.), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(Kernel{KernelKind::triangular}(0.25), 0.75);
    EXPECT_EQ(Kernel{KernelKind::triangular}(1.), 0.);
    EXPECT_EQ(Kernel{KernelKind::triangular}(3.), 0.);
}

TEST(Kernel, ParseAndPrint)
{
    EXPECT_EQ(parse_kernel("gaussian"), KernelKind::gaussian);
    EXPECT_EQ(parse_kernel("triangular"), KernelKind::triangular);
    EXPECT_EQ(to_string(KernelKind::triangular), "triangular");
    EXPECT_THROW(parse_kernel("epanechnikov"), InvalidConfig);
}

TEST(FastExp, MatchesStdExpOnTheNonPositiveAxis)
{
    double worst = 0.;
    for (double x = -745.; x <= 0.; x += 0.0137) {
        const double want = std::exp(x);
        const double got = detail::exp_nonpositive(x);
        if (want > 1e-300)
            worst = std::max(worst, std::abs(got - want) / want);
        else
            EXPECT_LE(got, 1e-300);
    }
    EXPECT_LT(worst, 1e-14);
    EXPECT_EQ(detail::exp_nonpositive(0.), 1.);
    EXPECT_EQ(detail::exp_nonpositive(-1000.), 0.);
    EXPECT_EQ(detail::exp_nonpositive(-std::numeric_limits<double>::infinity()), 0.);
}

TEST(Kde, HandExamples)
{
    KdeEstimator tri(1., KernelKind::triangular);
    std::vector<FeatureVector> one{pt(0, 0)};
    tri.refresh(one);
    EXPECT_DOUBLE_EQ(tri.query(pt(0, 0)), 1.);

    std::vector<FeatureVector> two{pt(0, 0), pt(2, 0)};
    tri.refresh(two);
    EXPECT_EQ(tri.query(pt(1, 0)), 0.);
    EXPECT_DOUBLE_EQ(tri.query(pt(0.5, 0)), 0.25);
}

TEST(Kde, MatchesBruteForceOracle)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng = make_rng(seed, 17);
        const auto dims = static_cast<Eigen::Index>(1 + test::uniform_index(rng, 10));
        const std::size_t count = 1 + test::uniform_index(rng, 1500);
        const double h = std::exp(std::uniform_real_distribution<double>(std::log(0.01), std::log(10.))(rng));
        const auto xs = test::uniform_points(rng, count, dims, 0., 1.);
        for (auto kind : {KernelKind::gaussian, KernelKind::triangular}) {
            KdeEstimator kde(h, kind);
            kde.refresh(xs);
            for (int p = 0; p < 20; ++p) {
                const auto y = test::uniform_point(rng, dims, -0.5, 1.5);
                const double want = test::naive_kde(y, xs, h, kind == KernelKind::gaussian);
                EXPECT_NEAR(kde.query(y), want, 1e-12) << "seed " << seed;
            }
        }
    }
}

TEST(Kde, FiftyPointGaussianExample)
{
    Rng rng = make_rng(50);
    const auto xs = test::uniform_points(rng, 50, 2, 0., 1.);
    KdeEstimator kde(0.1);
    kde.refresh(xs);
    for (int p = 0; p < 100; ++p) {
        const auto y = test::uniform_point(rng, 2, 0., 1.);
        EXPECT_NEAR(kde.query(y), test::naive_kde(y, xs, 0.1, true), 1e-12);
    }
}

TEST(Kde, EmptyAndInvalidUse)
{
    KdeEstimator kde(1.);
    EXPECT_TRUE(kde.empty());
    EXPECT_THROW(kde.query(pt(0, 0)), EmptyEstimator);
    EXPECT_THROW(KdeEstimator(0.), InvalidArgument);
    EXPECT_THROW(KdeEstimator(-1.), InvalidArgument);
    EXPECT_THROW(KdeEstimator(std::numeric_limits<double>::infinity()), InvalidArgument);
    EXPECT_THROW(kde.refresh(std::vector<FeatureVector>{}), InvalidArgument);
    std::vector<FeatureVector> ragged{pt(0, 0), FeatureVector::Zero(3)};
    EXPECT_THROW(kde.refresh(ragged), InvalidArgument);
    kde.refresh(std::vector<FeatureVector>{pt(0, 0)});
    EXPECT_THROW(kde.query(FeatureVector::Zero(3)), InvalidArgument);
}

TEST(Kde, RefreshReplacesTheSnapshot)
{
    Rng rng = make_rng(4);
    const auto a = test::uniform_points(rng, 40, 2, 0., 1.);
    const auto b = test::uniform_points(rng, 40, 2, 5., 6.);
    KdeEstimator kde(0.3);
    kde.refresh(a);
    const double before = kde.query(pt(0.5, 0.5));
    kde.refresh(a);
    EXPECT_EQ(kde.query(pt(0.5, 0.5)), before);
    kde.refresh(b);
    EXPECT_NEAR(kde.query(pt(0.5, 0.5)), test::naive_kde(pt(0.5, 0.5), b, 0.3, true), 1e-12);
    EXPECT_EQ(kde.size(), 40u);
}

TEST(Kde, FarSecondPointHalvesTheDensity)
{
    KdeEstimator kde(0.5);
    kde.refresh(std::vector<FeatureVector>{pt(0, 0)});
    const double one = kde.query(pt(0.1, 0.2));
    kde.refresh(std::vector<FeatureVector>{pt(0, 0), pt(1e6, 0)});
    EXPECT_DOUBLE_EQ(kde.query(pt(0.1, 0.2)), one / 2.);
}

// Property: queries stay in [0, sup K / h] and never NaN.
TEST(Kde, QueriesAreBoundedAndFinite)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng = make_rng(seed, 3);
        const double h = 0.05 + 5. * std::uniform_real_distribution<double>(0., 1.)(rng);
        const auto xs = test::uniform_points(rng, 1 + test::uniform_index(rng, 300), 3, -2., 2.);
        for (auto kind : {KernelKind::gaussian, KernelKind::triangular}) {
            KdeEstimator kde(h, kind);
            kde.refresh(xs);
            for (int p = 0; p < 50; ++p) {
                const double v = kde.query(test::uniform_point(rng, 3, -3., 3.));
                EXPECT_FALSE(std::isnan(v));
                EXPECT_GE(v, 0.);
                EXPECT_LE(v, kde.upper_bound() * (1. + 1e-12));
            }
            // At a duplicated point the bound is attained.
            std::vector<FeatureVector> same(5, xs.front());
            kde.refresh(same);
            EXPECT_NEAR(kde.query(xs.front()), kde.upper_bound(), 1e-15);
        }
    }
}

TEST(Kde, QueryBatchMatchesSingleQueries)
{
    Rng rng = make_rng(12);
    const auto xs = test::uniform_points(rng, 100, 2, 0., 1.);
    const auto ys = test::uniform_points(rng, 17, 2, 0., 1.);
    KdeEstimator kde(0.2);
    kde.refresh(xs);
    const auto batch = kde.query_batch(ys);
    for (std::size_t i = 0; i < ys.size(); ++i)
        EXPECT_EQ(batch[i], kde.query(ys[i]));
}

// One-element swaps move the density by at most 1 / (|B| h) anywhere.
TEST(Kde, StabilityUnderOneSwap)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng = make_rng(seed, 5);
        const std::size_t n = 100;
        const double h = 0.5;
        auto xs = test::uniform_points(rng, n, 2, 0., 1.);
        KdeEstimator a(h), b(h);
        a.refresh(xs);
        xs[test::uniform_index(rng, n)] = test::uniform_point(rng, 2, 0., 1.);
        b.refresh(xs);
        double sup = 0.;
        for (int p = 0; p < 2000; ++p) {
            const auto y = test::uniform_point(rng, 2, -0.5, 1.5);
            sup = std::max(sup, std::abs(a.query(y) - b.query(y)));
        }
        EXPECT_LE(sup, 1. / (static_cast<double>(n) * h));
    }
}

TEST(Bandwidth, AffineConversion)
{
    EXPECT_EQ(convert_bandwidth(1., 2.), 2.);
    EXPECT_THROW(convert_bandwidth(0., 2.), InvalidArgument);
    EXPECT_THROW(convert_bandwidth(1., -2.), InvalidArgument);

    Rng rng = make_rng(37);
    const double a = 3.7;
    FeatureVector b(2);
    b << 5., -2.;
    const auto xs = test::uniform_points(rng, 200, 2, -1., 1.);
    std::vector<FeatureVector> moved;
    for (const auto& x : xs)
        moved.push_back(a * x + b);
    for (double h : {0.05, 0.3, 2.}) {
        KdeEstimator before(h), after(convert_bandwidth(h, a));
        before.refresh(xs);
        after.refresh(moved);
        for (int p = 0; p < 100; ++p) {
            const auto x = test::uniform_point(rng, 2, -1.5, 1.5);
            // Transformed densities carry the 1/a factor from the 1/h normalization.
            EXPECT_NEAR(before.query(x), a * after.query(a * x + b), 1e-9);
        }
    }
}

TEST(Novelty, HandExamples)
{
    std::vector<FeatureVector> ref{pt(0, 0), pt(2, 0)};
    EXPECT_DOUBLE_EQ(novelty_score(pt(1, 0), ref, 2), 1.);
    EXPECT_EQ(novelty_score(pt(2, 0), ref, 1), 0.);
    EXPECT_DOUBLE_EQ(novelty_score(pt(1, 0), ref, 50), 1.);
    EXPECT_EQ(novelty_score(pt(1, 0), {}, 3), std::numeric_limits<double>::infinity());
    EXPECT_THROW(novelty_score(pt(1, 0), ref, 0), InvalidArgument);
}

TEST(Novelty, MatchesFullSortOracle)
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng = make_rng(seed, 9);
        const auto ref = test::uniform_points(rng, 1 + test::uniform_index(rng, 200), 3, 0., 1.);
        const std::size_t k = 1 + test::uniform_index(rng, 250);
        const auto y = test::uniform_point(rng, 3, 0., 1.);
        EXPECT_NEAR(novelty_score(y, ref, k), test::naive_novelty(y, ref, k), 1e-12);
    }
}

// Adding one point inside a box of diameter W changes novelty by at most W / k.
TEST(Novelty, StabilityUnderOneAddition)
{
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Rng rng = make_rng(seed, 10);
        const double side = 1. + 9. * std::uniform_real_distribution<double>(0., 1.)(rng);
        const double diameter = side * std::sqrt(2.);
        auto ref = test::uniform_points(rng, 20 + test::uniform_index(rng, 200), 2, 0., side);
        const std::size_t k = 1 + test::uniform_index(rng, 30);
        auto grown = ref;
        grown.push_back(test::uniform_point(rng, 2, 0., side));
        for (int p = 0; p < 100; ++p) {
            const auto y = test::uniform_point(rng, 2, 0., side);
            EXPECT_LE(std::abs(novelty_score(y, ref, k) - novelty_score(y, grown, k)), diameter / static_cast<double>(k) + 1e-12);
        }
    }
}

// With k = |B| and a triangular kernel whose support covers the box, ranking
// by novelty (descending) and by density (ascending) coincide.
TEST(Novelty, RankingEquivalenceWithTriangularKde)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng = make_rng(seed, 11);
        const auto ref = test::uniform_points(rng, 50, 2, 0., 1.);
        const auto batch = test::uniform_points(rng, 10, 2, 0., 1.);
        KdeEstimator kde(std::sqrt(2.), KernelKind::triangular);
        kde.refresh(ref);
        std::vector<double> nov, dens;
        for (const auto& y : batch) {
            nov.push_back(novelty_score(y, ref, ref.size()));
            dens.push_back(kde.query(y));
        }
        EXPECT_EQ(order_by(nov, true), order_by(dens, false)) << "seed " << seed;
    }
}
