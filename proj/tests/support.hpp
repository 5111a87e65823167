#ifndef DDS_TEST_SUPPORT_HPP
#define DDS_TEST_SUPPORT_HPP

#include <dds/common.hpp>

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace dds::test {

    inline FeatureVector uniform_point(Rng& rng, Eigen::Index dims, double lo, double hi)
    {
        std::uniform_real_distribution<double> u(lo, hi);
        FeatureVector y(dims);
        for (Eigen::Index d = 0; d < dims; ++d)
            y(d) = u(rng);
        return y;
    }

    inline std::vector<FeatureVector> uniform_points(Rng& rng, std::size_t count, Eigen::Index dims, double lo, double hi)
    {
        std::vector<FeatureVector> out;
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(uniform_point(rng, dims, lo, hi));
        return out;
    }

    inline std::size_t uniform_index(Rng& rng, std::size_t n)
    {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }

    /// Straight transcription of the kernel density formula.
    inline double naive_kde(const FeatureVector& y, const std::vector<FeatureVector>& xs, double h, bool gaussian)
    {
        long double total = 0.;
        for (const auto& x : xs) {
            long double d2 = 0.;
            for (Eigen::Index i = 0; i < y.size(); ++i)
                d2 += (static_cast<long double>(y(i)) - x(i)) * (static_cast<long double>(y(i)) - x(i));
            const long double u = std::sqrt(d2) / h;
            total += gaussian ? std::exp(-0.5L * u * u) : (u < 1 ? 1 - u : 0);
        }
        return static_cast<double>(total / (static_cast<long double>(xs.size()) * h));
    }

    /// Mean distance to the k nearest by full sort.
    inline double naive_novelty(const FeatureVector& y, const std::vector<FeatureVector>& ref, std::size_t k)
    {
        std::vector<double> d;
        for (const auto& x : ref)
            d.push_back((x - y).norm());
        std::sort(d.begin(), d.end());
        const std::size_t c = std::min(k, d.size());
        double s = 0.;
        for (std::size_t i = 0; i < c; ++i)
            s += d[i];
        return s / static_cast<double>(c);
    }

} // namespace dds::test

#endif
