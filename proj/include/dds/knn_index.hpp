#ifndef DDS_KNN_INDEX_HPP
#define DDS_KNN_INDEX_HPP

#include <dds/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace dds {

    namespace detail {
        using v8d = double __attribute__((vector_size(64)));
        using v8l = long long __attribute__((vector_size(64)));

        inline v8d load8(const double* p)
        {
            v8d v;
            std::memcpy(&v, p, sizeof(v));
            return v;
        }

        inline void store8(double* p, v8d v) { std::memcpy(p, &v, sizeof(v)); }

        inline bool any_below(v8d v, double bound)
        {
#if defined(__AVX512F__)
            return _mm512_cmp_pd_mask(reinterpret_cast<__m512d>(v), _mm512_set1_pd(bound), _CMP_LT_OQ) != 0;
#else
            const v8l m = v < bound;
            return (m[0] | m[1] | m[2] | m[3] | m[4] | m[5] | m[6] | m[7]) != 0;
#endif
        }

        /// Blocks of 8 squared distances, each summed over the dimensions in
        /// order, that hold at least one value below the query's bound.
        struct BlockHits {
            std::size_t count = 0;
            std::uint32_t* offsets = nullptr;
            double* values = nullptr;
        };

        // Q queries against n column-stored points (n a multiple of 8). Only
        // blocks with a candidate leave the registers.
        template <int Q>
        void scan_blocks(const double* cols, std::size_t stride, std::size_t n, std::size_t dims, const double* queries, const double* bounds,
            BlockHits* hits)
        {
            for (std::size_t i = 0; i < n; i += 8) {
                v8d acc[Q];
                for (int j = 0; j < Q; ++j)
                    acc[j] = v8d{};
                for (std::size_t d = 0; d < dims; ++d) {
                    const v8d p = load8(cols + d * stride + i);
                    for (int j = 0; j < Q; ++j) {
                        const v8d t = queries[static_cast<std::size_t>(j) * dims + d] - p;
                        acc[j] += t * t;
                    }
                }
                for (int j = 0; j < Q; ++j) {
                    if (any_below(acc[j], bounds[j])) [[unlikely]] {
                        BlockHits& h = hits[j];
                        h.offsets[h.count] = static_cast<std::uint32_t>(i);
                        store8(h.values + 8 * h.count, acc[j]);
                        ++h.count;
                    }
                }
            }
        }

        /// Offers `values[0..n)` to a max-heap holding the k smallest so far.
        inline void offer_smallest(const double* values, std::size_t n, std::size_t k, std::vector<double>& heap)
        {
            for (std::size_t i = 0; i < n; ++i) {
                if (heap.size() < k) {
                    heap.push_back(values[i]);
                    std::push_heap(heap.begin(), heap.end());
                }
                else if (values[i] < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = values[i];
                    std::push_heap(heap.begin(), heap.end());
                }
            }
        }
    } // namespace detail

    /// Append-only point set answering exact k-nearest-distance queries by
    /// linear scan. Points live column-wise in fixed-size chunks so the
    /// distance kernel streams each coordinate with full-width vector loads
    /// and reuses every load for a block of queries.
    class KnnScanner {
    public:
        static constexpr std::size_t chunk_points = 2048;

        explicit KnnScanner(std::size_t dims) : _dims(dims)
        {
            if (dims == 0)
                throw InvalidArgument("KnnScanner: dimension must be positive");
        }

        std::size_t dims() const { return _dims; }
        std::size_t size() const { return _size; }

        void insert(const double* point)
        {
            const std::size_t slot = _size % chunk_points;
            if (slot == 0)
                _chunks.push_back(std::make_unique<double[]>(chunk_points * _dims));
            double* chunk = _chunks.back().get();
            for (std::size_t d = 0; d < _dims; ++d)
                chunk[d * chunk_points + slot] = point[d];
            ++_size;
        }

        double coordinate(std::size_t index, std::size_t d) const { return _chunks[index / chunk_points][d * chunk_points + index % chunk_points]; }

        /// For each query (consecutive groups of dims() values), the squared
        /// distances to its min(k, size) nearest points, ascending.
        std::vector<std::vector<double>> k_nearest_squared(std::span<const double> queries, std::size_t k) const
        {
            if (queries.size() % _dims != 0)
                throw InvalidArgument("KnnScanner: query block is not a multiple of the dimension");
            const std::size_t count = queries.size() / _dims;
            std::vector<std::vector<double>> heaps(count);
            if (k == 0 || _size == 0 || count == 0)
                return heaps;
            for (auto& h : heaps)
                h.reserve(std::min(k, _size));

            constexpr std::size_t block = 6;
            // Room for every block of a chunk, per query of a block.
            std::vector<std::uint32_t> offsets(block * chunk_points / 8);
            std::vector<double> values(block * chunk_points);
            detail::BlockHits hits[block];
            for (std::size_t j = 0; j < block; ++j) {
                hits[j].offsets = offsets.data() + j * chunk_points / 8;
                hits[j].values = values.data() + j * chunk_points;
            }
            double bounds[block];
            // Newest chunk first: recent points tend to be close, which
            // tightens the bounds early.
            for (std::size_t c = _chunks.size(); c-- > 0;) {
                const std::size_t n = c + 1 == _chunks.size() ? _size - c * chunk_points : chunk_points;
                const std::size_t padded = (n + 7) / 8 * 8;
                for (std::size_t q = 0; q < count; q += block) {
                    const std::size_t m = std::min(block, count - q);
                    for (std::size_t j = 0; j < m; ++j) {
                        const auto& h = heaps[q + j];
                        bounds[j] = h.size() < k ? std::numeric_limits<double>::infinity() : h.front();
                        hits[j].count = 0;
                    }
                    const double* qs = queries.data() + q * _dims;
                    if (m == block)
                        detail::scan_blocks<block>(_chunks[c].get(), chunk_points, padded, _dims, qs, bounds, hits);
                    else
                        for (std::size_t j = 0; j < m; ++j)
                            detail::scan_blocks<1>(_chunks[c].get(), chunk_points, padded, _dims, qs + j * _dims, bounds + j, hits + j);
                    for (std::size_t j = 0; j < m; ++j)
                        for (std::size_t h = 0; h < hits[j].count; ++h) {
                            const std::size_t first = hits[j].offsets[h];
                            // Padding lanes past the last point are not offered.
                            detail::offer_smallest(hits[j].values + 8 * h, std::min<std::size_t>(8, n - first), k, heaps[q + j]);
                        }
                }
            }
            for (auto& h : heaps)
                std::sort_heap(h.begin(), h.end());
            return heaps;
        }

        std::vector<double> k_nearest_squared(const double* query, std::size_t k) const
        {
            return std::move(k_nearest_squared(std::span<const double>(query, _dims), k).front());
        }

    private:
        std::size_t _dims;
        std::size_t _size = 0;
        std::vector<std::unique_ptr<double[]>> _chunks;
    };

    /// Exact nearest-point lookup over a fixed point set by vectorized
    /// scan. Equal distances resolve to the lowest index.
    class NearestScanner {
    public:
        NearestScanner() = default;

        explicit NearestScanner(const Matrix& points)
            : _count(static_cast<std::size_t>(points.rows())), _stride((_count + 7) / 8 * 8), _dims(static_cast<std::size_t>(points.cols()))
        {
            if (_count == 0 || _dims == 0)
                throw InvalidArgument("NearestScanner: empty point set");
            // Padding lanes sit at +inf so they never win.
            _cols.assign(_stride * _dims, std::numeric_limits<double>::infinity());
            for (std::size_t i = 0; i < _count; ++i)
                for (std::size_t d = 0; d < _dims; ++d)
                    _cols[d * _stride + i] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
        }

        std::size_t size() const { return _count; }
        std::size_t dims() const { return _dims; }

        std::size_t nearest(const double* query) const
        {
            std::size_t out;
            _scan<1>(query, &out);
            return out;
        }

        /// Nearest index for each of the consecutive dims()-sized queries.
        std::vector<std::size_t> nearest(std::span<const double> queries) const
        {
            if (queries.size() % _dims != 0)
                throw InvalidArgument("NearestScanner: query block is not a multiple of the dimension");
            const std::size_t count = queries.size() / _dims;
            std::vector<std::size_t> out(count);
            std::size_t q = 0;
            for (; q + 6 <= count; q += 6)
                _scan<6>(queries.data() + q * _dims, out.data() + q);
            for (; q < count; ++q)
                _scan<1>(queries.data() + q * _dims, out.data() + q);
            return out;
        }

    private:
        template <int Q>
        void _scan(const double* queries, std::size_t* out) const
        {
            using detail::v8d;
            using detail::v8l;
            v8d best[Q];
            v8l where[Q];
            for (int j = 0; j < Q; ++j) {
                best[j] = v8d{} + std::numeric_limits<double>::infinity();
                where[j] = v8l{};
            }
            const v8l lanes = {0, 1, 2, 3, 4, 5, 6, 7};
            for (std::size_t i = 0; i < _stride; i += 8) {
                v8d acc[Q];
                for (int j = 0; j < Q; ++j)
                    acc[j] = v8d{};
                for (std::size_t d = 0; d < _dims; ++d) {
                    const v8d p = detail::load8(_cols.data() + d * _stride + i);
                    for (int j = 0; j < Q; ++j) {
                        const v8d t = queries[static_cast<std::size_t>(j) * _dims + d] - p;
                        acc[j] += t * t;
                    }
                }
                const v8l index = lanes + static_cast<long long>(i);
                for (int j = 0; j < Q; ++j) {
                    const v8l better = acc[j] < best[j];
                    best[j] = better ? acc[j] : best[j];
                    where[j] = better ? index : where[j];
                }
            }
            for (int j = 0; j < Q; ++j) {
                double d = best[j][0];
                long long w = where[j][0];
                for (int l = 1; l < 8; ++l)
                    if (best[j][l] < d || (best[j][l] == d && where[j][l] < w)) {
                        d = best[j][l];
                        w = where[j][l];
                    }
                out[j] = static_cast<std::size_t>(w);
            }
        }

        std::size_t _count = 0, _stride = 0, _dims = 0;
        std::vector<double> _cols;
    };

} // namespace dds

#endif
