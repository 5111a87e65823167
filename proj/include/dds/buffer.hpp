#ifndef DDS_BUFFER_HPP
#define DDS_BUFFER_HPP

#include <dds/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace dds {

    /// Fixed-capacity uniform sample of a feature stream (reservoir sampling,
    /// Li's Algorithm L). Replacements happen one element at a time.
    class FeatureBuffer {
    public:
        explicit FeatureBuffer(std::size_t capacity, std::uint64_t seed = 0) : _capacity(capacity), _rng(make_rng(seed, 0xb0ffe7))
        {
            if (capacity == 0)
                throw InvalidArgument("FeatureBuffer: capacity must be positive");
            _contents.reserve(std::min<std::size_t>(capacity, 1 << 16));
        }

        /// Offers one feature. Returns the slot it was written to, if any.
        std::optional<std::size_t> offer(const FeatureVector& feature)
        {
            ++_seen;
            if (_seen <= _capacity) {
                _contents.push_back(feature);
                if (_seen == _capacity) {
                    _w = std::exp(std::log(_open_uniform()) / static_cast<double>(_capacity));
                    _schedule_next();
                }
                return _contents.size() - 1;
            }
            if (_seen != _next)
                return std::nullopt;
            std::uniform_int_distribution<std::size_t> slot(0, _capacity - 1);
            const std::size_t pos = slot(_rng);
            _contents[pos] = feature;
            _w *= std::exp(std::log(_open_uniform()) / static_cast<double>(_capacity));
            _schedule_next();
            return pos;
        }

        /// Offers a batch element by element.
        void offer(std::span<const FeatureVector> features)
        {
            for (const auto& f : features)
                offer(f);
        }

        std::vector<FeatureVector> snapshot() const { return _contents; }
        std::span<const FeatureVector> contents() const { return _contents; }

        std::size_t capacity() const { return _capacity; }
        std::size_t size() const { return _contents.size(); }
        std::uint64_t seen_count() const { return _seen; }
        bool empty() const { return _contents.empty(); }

    private:
        double _open_uniform()
        {
            std::uniform_real_distribution<double> uniform(0., 1.);
            double u = 0.;
            while (u == 0.)
                u = uniform(_rng);
            return u;
        }

        // Position of the next accepted stream element: skip a geometric
        // number of elements with success probability w.
        void _schedule_next()
        {
            const double skip = std::floor(std::log(_open_uniform()) / std::log1p(-_w));
            constexpr double far = static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2);
            _next = _seen + 1 + (skip < far ? static_cast<std::uint64_t>(skip) : static_cast<std::uint64_t>(far));
        }

        std::size_t _capacity;
        Rng _rng;
        std::vector<FeatureVector> _contents;
        std::uint64_t _seen = 0;
        std::uint64_t _next = 0;
        double _w = 0.;
    };

} // namespace dds

#endif
