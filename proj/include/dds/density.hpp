#ifndef DDS_DENSITY_HPP
#define DDS_DENSITY_HPP

#include <dds/common.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dds {

    enum class KernelKind { gaussian, triangular };

    inline std::string_view to_string(KernelKind kind)
    {
        return kind == KernelKind::gaussian ? "gaussian" : "triangular";
    }

    inline KernelKind parse_kernel(std::string_view name)
    {
        if (name == "gaussian")
            return KernelKind::gaussian;
        if (name == "triangular")
            return KernelKind::triangular;
        throw InvalidConfig("unknown kernel '" + std::string(name) + "' (expected gaussian|triangular)");
    }

    namespace detail {
        /// exp(x) for x <= 0, within a few ulp of std::exp. Written without
        /// branches or library calls so that loops over it vectorize.
        inline double exp_nonpositive(double x)
        {
            constexpr double log2e = 1.4426950408889634;
            constexpr double ln2_hi = 6.93147180369123816490e-01;
            constexpr double ln2_lo = 1.90821492927058770002e-10;
            constexpr double shifter = 0x1.8p52;
            const double xc = x < -708. ? -708. : x;
            const double t = xc * log2e + shifter;
            const double n = t - shifter;
            const double r = (xc - n * ln2_hi) - n * ln2_lo;
            // Taylor series to degree 13; |r| <= ln2/2.
            double p = 1. / 6227020800.;
            p = p * r + 1. / 479001600.;
            p = p * r + 1. / 39916800.;
            p = p * r + 1. / 3628800.;
            p = p * r + 1. / 362880.;
            p = p * r + 1. / 40320.;
            p = p * r + 1. / 5040.;
            p = p * r + 1. / 720.;
            p = p * r + 1. / 120.;
            p = p * r + 1. / 24.;
            p = p * r + 1. / 6.;
            p = p * r + 0.5;
            p = p * r + 1.;
            p = p * r + 1.;
            const auto ni = static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(t) - std::bit_cast<std::uint64_t>(shifter));
            const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ni + 1023) << 52);
            return x < -708. ? 0. : p * scale;
        }

        /// Sum with eight interleaved accumulators in a fixed order.
        inline double lane_sum(const double* values, std::size_t count)
        {
            std::array<double, 8> acc{};
            std::size_t i = 0;
            for (; i + 8 <= count; i += 8)
                for (std::size_t j = 0; j < 8; ++j)
                    acc[j] += values[i + j];
            double total = 0.;
            for (; i < count; ++i)
                total += values[i];
            for (double a : acc)
                total += a;
            return total;
        }
    } // namespace detail

    /// Radial kernel bounded in [0, 1] with K(0) = 1.
    struct Kernel {
        KernelKind kind = KernelKind::gaussian;

        double operator()(double u) const
        {
            u = std::abs(u);
            if (kind == KernelKind::gaussian)
                return std::exp(-0.5 * u * u);
            return u < 1. ? 1. - u : 0.;
        }

        static constexpr double supremum() { return 1.; }
    };

    /// Continuous density over feature space rebuilt from a feature set.
    class DensityEstimator {
    public:
        virtual ~DensityEstimator() = default;
        virtual double query(const FeatureVector& y) const = 0;
        virtual void refresh(std::span<const FeatureVector> features) = 0;
        virtual bool empty() const = 0;

        std::vector<double> query_batch(std::span<const FeatureVector> ys) const
        {
            std::vector<double> out;
            out.reserve(ys.size());
            for (const auto& y : ys)
                out.push_back(query(y));
            return out;
        }
    };

    /// D(y) = 1/(|X| h) * sum_{x in X} K(||y - x|| / h) over an immutable
    /// snapshot X.
    class KdeEstimator final : public DensityEstimator {
    public:
        explicit KdeEstimator(double bandwidth, KernelKind kernel = KernelKind::gaussian) : _bandwidth(bandwidth), _kernel{kernel}
        {
            if (!(bandwidth > 0.) || !std::isfinite(bandwidth))
                throw InvalidArgument("KdeEstimator: bandwidth must be positive");
        }

        double query(const FeatureVector& y) const override
        {
            if (_count == 0)
                throw EmptyEstimator("KdeEstimator: query before any refresh");
            if (y.size() != _points.cols())
                throw InvalidArgument("KdeEstimator: feature dimension mismatch");

            constexpr std::size_t chunk = 512;
            alignas(64) std::array<double, chunk> dist2;
            const double inv_h = 1. / _bandwidth;
            const double gauss_scale = -0.5 * inv_h * inv_h;
            const Eigen::Index dims = _points.cols();
            double total = 0.;
            for (std::size_t start = 0; start < _count; start += chunk) {
                const std::size_t len = std::min(chunk, _count - start);
                std::fill_n(dist2.data(), len, 0.);
                for (Eigen::Index d = 0; d < dims; ++d) {
                    const double* col = _points.col(d).data() + start;
                    const double yd = y(d);
                    for (std::size_t i = 0; i < len; ++i) {
                        const double diff = col[i] - yd;
                        dist2[i] += diff * diff;
                    }
                }
                if (_kernel.kind == KernelKind::gaussian) {
                    for (std::size_t i = 0; i < len; ++i)
                        dist2[i] = detail::exp_nonpositive(dist2[i] * gauss_scale);
                }
                else {
                    for (std::size_t i = 0; i < len; ++i) {
                        const double v = 1. - std::sqrt(dist2[i]) * inv_h;
                        dist2[i] = v > 0. ? v : 0.;
                    }
                }
                total += detail::lane_sum(dist2.data(), len);
            }
            return total / (static_cast<double>(_count) * _bandwidth);
        }

        /// Replaces the snapshot with a copy of `features`.
        void refresh(std::span<const FeatureVector> features) override
        {
            if (features.empty())
                throw InvalidArgument("KdeEstimator::refresh: empty feature set");
            const Eigen::Index dims = features.front().size();
            Matrix points(static_cast<Eigen::Index>(features.size()), dims);
            for (std::size_t i = 0; i < features.size(); ++i) {
                if (features[i].size() != dims)
                    throw InvalidArgument("KdeEstimator::refresh: ragged feature set");
                points.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
            }
            _points = std::move(points);
            _count = features.size();
        }

        bool empty() const override { return _count == 0; }
        std::size_t size() const { return _count; }
        double bandwidth() const { return _bandwidth; }
        KernelKind kernel() const { return _kernel.kind; }
        /// Upper bound of query(): sup K / h.
        double upper_bound() const { return Kernel::supremum() / _bandwidth; }

    private:
        double _bandwidth;
        Kernel _kernel;
        Matrix _points; // one row per feature, one column per dimension
        std::size_t _count = 0;
    };

    /// Bandwidth that keeps KDE values unchanged under y = scale * x + b.
    inline double convert_bandwidth(double h, double scale)
    {
        if (!(h > 0.) || !(scale > 0.))
            throw InvalidArgument("convert_bandwidth: bandwidth and scale must be positive");
        return scale * h;
    }

    /// Mean Euclidean distance from `y` to its min(k, |reference|) nearest
    /// neighbours. Equal distances are resolved by position in `reference`.
    /// An empty reference set yields +infinity.
    inline double novelty_score(const FeatureVector& y, std::span<const FeatureVector> reference, std::size_t k)
    {
        if (k == 0)
            throw InvalidArgument("novelty_score: k must be positive");
        if (reference.empty())
            return std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(reference.size());
        for (std::size_t i = 0; i < reference.size(); ++i)
            dist.emplace_back((reference[i] - y).norm(), i);
        const std::size_t count = std::min(k, dist.size());
        if (count < dist.size())
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
        std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count));
        double total = 0.;
        for (std::size_t i = 0; i < count; ++i)
            total += dist[i].first;
        return total / static_cast<double>(count);
    }

} // namespace dds

#endif
