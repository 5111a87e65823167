#include <dds/metrics.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace dds;

namespace {

    // Direct transcription with the one-visit smoothing of empty cells.
    double brute_ce(const std::vector<std::uint64_t>& counts)
    {
        long double total = 0.;
        for (auto c : counts)
            total += c == 0 ? 1 : c;
        long double s = 0.;
        for (auto c : counts)
            s -= std::log((c == 0 ? 1.L : static_cast<long double>(c)) / total) / static_cast<long double>(counts.size());
        return static_cast<double>(s);
    }

    std::vector<std::uint64_t> random_counts(Rng& rng, std::size_t cells, bool allow_empty)
    {
        std::uniform_int_distribution<std::uint64_t> c(allow_empty ? 0 : 1, 40);
        std::vector<std::uint64_t> out(cells);
        for (auto& v : out)
            v = c(rng);
        if (std::all_of(out.begin(), out.end(), [](auto v) { return v == 0; }))
            out[0] = 1;
        return out;
    }

    ElitesArchive grid(std::size_t per_dim)
    {
        return ElitesArchive(GridTessellation(Vector::Zero(2), Vector::Constant(2, static_cast<double>(per_dim)), {per_dim, per_dim}));
    }

    FeatureVector centre(std::size_t x, std::size_t y)
    {
        FeatureVector v(2);
        v << static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5;
        return v;
    }

    RunRecord record_with(std::initializer_list<double> coverages)
    {
        RunRecord r;
        std::uint64_t it = 0;
        for (double c : coverages) {
            ++it;
            r.history.push_back({it, it * 36, c, 1. + c, static_cast<std::size_t>(c * 100)});
        }
        return r;
    }

} // namespace

TEST(Coverage, Examples)
{
    auto a = grid(100);
    EXPECT_EQ(coverage(a), 0.);
    for (std::size_t i = 0; i < 8024; ++i)
        a.add(SolutionVector::Zero(1), centre(i / 100, i % 100), 1.);
    EXPECT_DOUBLE_EQ(coverage(a), 0.8024);
    auto b = grid(3);
    for (std::size_t i = 0; i < 9; ++i)
        b.add(SolutionVector::Zero(1), centre(i / 3, i % 3), 1.);
    EXPECT_EQ(coverage(b), 1.);
}

TEST(CrossEntropy, Examples)
{
    EXPECT_NEAR(cross_entropy(std::vector<std::uint64_t>(10000, 7)), 9.2103, 1e-4);
    EXPECT_NEAR(cross_entropy(std::vector<std::uint64_t>(10000, 7)), std::log(10000.), 1e-9);
    EXPECT_NEAR(cross_entropy(std::vector<std::uint64_t>{1, 1}), std::log(2.), 1e-15);
    EXPECT_NEAR(cross_entropy(std::vector<std::uint64_t>{3, 1}), -0.5 * (std::log(0.75) + std::log(0.25)), 1e-15);
    EXPECT_NEAR(cross_entropy(std::vector<std::uint64_t>{3, 1}), 0.8370, 1e-4);
}

TEST(CrossEntropy, EmptyCellsCountAsOneVisit)
{
    EXPECT_DOUBLE_EQ(cross_entropy(std::vector<std::uint64_t>{0, 2}), brute_ce({1, 2}));
    EXPECT_DOUBLE_EQ(cross_entropy(std::vector<std::uint64_t>{0, 1}), std::log(2.));
}

TEST(CrossEntropy, UndefinedWithoutVisits)
{
    EXPECT_THROW(cross_entropy(std::vector<std::uint64_t>(5, 0)), UndefinedMetric);
    EXPECT_THROW(cross_entropy(std::vector<std::uint64_t>{}), UndefinedMetric);
    EXPECT_THROW(cross_entropy(grid(4)), UndefinedMetric);
}

TEST(CrossEntropy, MatchesBruteForceProperty)
{
    Rng rng = make_rng(1);
    for (int t = 0; t < 2000; ++t) {
        const auto counts = random_counts(rng, 1 + test::uniform_index(rng, 30), true);
        EXPECT_NEAR(cross_entropy(counts), brute_ce(counts), 1e-12);
    }
}

TEST(CrossEntropy, FloorIsLogCellCountProperty)
{
    Rng rng = make_rng(2);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t l = 1 + test::uniform_index(rng, 50);
        const auto counts = random_counts(rng, l, true);
        const double ce = cross_entropy(counts);
        const bool uniform = std::all_of(counts.begin(), counts.end(), [&](auto c) { return (c == 0 ? 1 : c) == (counts[0] == 0 ? 1 : counts[0]); });
        if (uniform)
            EXPECT_NEAR(ce, std::log(static_cast<double>(l)), 1e-12);
        else
            EXPECT_GT(ce, std::log(static_cast<double>(l)));
    }
}

TEST(CrossEntropy, PermutationInvariantProperty)
{
    Rng rng = make_rng(3);
    for (int t = 0; t < 500; ++t) {
        auto counts = random_counts(rng, 20, true);
        const double before = cross_entropy(counts);
        std::shuffle(counts.begin(), counts.end(), rng);
        EXPECT_NEAR(cross_entropy(counts), before, 1e-12);
    }
}

TEST(CrossEntropy, TransferTowardsEqualityNeverRaisesProperty)
{
    // Moving one visit from a fuller cell to an emptier one is a
    // majorization step; CE is Schur-convex in the counts.
    Rng rng = make_rng(4);
    for (int t = 0; t < 3000; ++t) {
        auto counts = random_counts(rng, 2 + test::uniform_index(rng, 20), false);
        const auto hi = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        const auto lo = static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) - counts.begin());
        if (counts[hi] < counts[lo] + 2)
            continue;
        const double before = brute_ce(counts);
        --counts[hi];
        ++counts[lo];
        EXPECT_LE(cross_entropy(counts), before + 1e-12);
    }
}

TEST(CrossEntropy, VisitToLeastVisitedCellWhenAllVisitedProperty)
{
    Rng rng = make_rng(5);
    for (int t = 0; t < 3000; ++t) {
        auto counts = random_counts(rng, 2 + test::uniform_index(rng, 20), false);
        if (std::all_of(counts.begin(), counts.end(), [&](auto c) { return c == counts[0]; }))
            continue;
        const double before = cross_entropy(counts);
        ++*std::min_element(counts.begin(), counts.end());
        EXPECT_LE(cross_entropy(counts), before + 1e-12);
    }
}

TEST(CrossEntropy, SmoothingBreaksLeastVisitedRuleWithEmptyCells)
{
    // Raw counts (0, 0, 2): one more visit to the only visited cell raises
    // CE, because the two smoothed empty cells fall further behind.
    const std::vector<std::uint64_t> before{0, 0, 2}, after{0, 0, 3};
    EXPECT_GT(cross_entropy(after), cross_entropy(before));
}

TEST(MeanSem, Examples)
{
    const std::vector<double> three{1., 2., 3.};
    const auto s = mean_sem(three);
    EXPECT_DOUBLE_EQ(s.mean, 2.);
    EXPECT_NEAR(s.sem, 0.5774, 1e-4);
    EXPECT_NEAR(s.sem, 1. / std::sqrt(3.), 1e-15);
    EXPECT_FALSE(s.degenerate);
    const std::vector<double> one{4.};
    EXPECT_EQ(mean_sem(one).sem, 0.);
    EXPECT_TRUE(mean_sem(one).degenerate);
    const std::vector<double> same(10, 0.3);
    EXPECT_EQ(mean_sem(same).sem, 0.);
    EXPECT_THROW(mean_sem(std::vector<double>{}), UndefinedMetric);
}

TEST(Summarize, PerIterationAcrossTrials)
{
    std::vector<RunRecord> rs{record_with({0.1, 0.2}), record_with({0.2, 0.4}), record_with({0.3, 0.6})};
    rs.push_back(RunRecord{});
    rs.back().failed = true;
    const auto rows = summarize(rs);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].trials, 3u);
    EXPECT_EQ(rows[1].iteration, 2u);
    EXPECT_EQ(rows[1].evaluations, 72u);
    EXPECT_NEAR(rows[0].coverage.mean, 0.2, 1e-15);
    EXPECT_NEAR(rows[1].coverage.sem, 0.2 / std::sqrt(3.), 1e-15);
    EXPECT_NEAR(rows[1].cross_entropy.mean, 1.4, 1e-15);
}

TEST(Summarize, RejectsDegenerateInput)
{
    std::vector<RunRecord> none;
    EXPECT_THROW(summarize(none), UndefinedMetric);
    std::vector<RunRecord> ragged{record_with({0.1}), record_with({0.1, 0.2})};
    EXPECT_THROW(summarize(ragged), UndefinedMetric);
    RunRecord empty;
    EXPECT_THROW(empty.final(), UndefinedMetric);
}

TEST(Measure, CoverageIsOccupiedOverCells)
{
    auto a = grid(10);
    Rng rng = make_rng(6);
    for (int i = 0; i < 300; ++i) {
        a.add(SolutionVector::Zero(1), test::uniform_point(rng, 2, 0., 10.), 1.);
        const auto m = measure(a, 1, 1);
        EXPECT_EQ(m.coverage, static_cast<double>(m.occupied_cells) / 100.);
        EXPECT_GE(m.cross_entropy, std::log(100.) - 1e-12);
    }
}
