#ifndef DDS_TESSELLATION_HPP
#define DDS_TESSELLATION_HPP

#include <dds/common.hpp>
#include <dds/knn_index.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace dds {

    namespace detail {
        inline void check_bounds(const Vector& lower, const Vector& upper)
        {
            if (lower.size() == 0 || lower.size() != upper.size())
                throw InvalidArgument("tessellation bounds: mismatched or empty");
            for (Eigen::Index d = 0; d < lower.size(); ++d)
                if (!(lower(d) < upper(d)) || !std::isfinite(lower(d)) || !std::isfinite(upper(d)))
                    throw InvalidArgument("tessellation bounds: lower must be below upper in every dimension");
        }

        inline void check_feature(const FeatureVector& y, Eigen::Index dims)
        {
            if (y.size() != dims)
                throw InvalidFeature("feature dimension " + std::to_string(y.size()) + " does not match archive dimension " + std::to_string(dims));
            for (Eigen::Index d = 0; d < dims; ++d)
                if (std::isnan(y(d)))
                    throw InvalidFeature("feature contains NaN");
        }
    } // namespace detail

    /// Equal-width bins per dimension; the last bin is right-closed and
    /// out-of-range coordinates fall into the boundary bin.
    class GridTessellation {
    public:
        GridTessellation(Vector lower, Vector upper, std::vector<std::size_t> cells_per_dim)
            : _lower(std::move(lower)), _upper(std::move(upper)), _cells(std::move(cells_per_dim))
        {
            detail::check_bounds(_lower, _upper);
            if (_cells.size() != static_cast<std::size_t>(_lower.size()))
                throw InvalidArgument("GridTessellation: one cell count per dimension required");
            _total = 1;
            for (std::size_t c : _cells) {
                if (c == 0)
                    throw InvalidArgument("GridTessellation: zero cells in a dimension");
                _total *= c;
            }
        }

        std::size_t cell_count() const { return _total; }
        Eigen::Index dims() const { return _lower.size(); }
        const std::vector<std::size_t>& cells_per_dim() const { return _cells; }
        const Vector& lower() const { return _lower; }
        const Vector& upper() const { return _upper; }

        std::size_t bin(const FeatureVector& y, Eigen::Index d) const
        {
            const double cells = static_cast<double>(_cells[static_cast<std::size_t>(d)]);
            const double v = (y(d) - _lower(d)) * cells / (_upper(d) - _lower(d));
            if (!(v > 0.))
                return 0;
            if (v >= cells)
                return _cells[static_cast<std::size_t>(d)] - 1;
            return static_cast<std::size_t>(v);
        }

        std::vector<std::size_t> coords(const FeatureVector& y) const
        {
            detail::check_feature(y, dims());
            std::vector<std::size_t> out(_cells.size());
            for (Eigen::Index d = 0; d < dims(); ++d)
                out[static_cast<std::size_t>(d)] = bin(y, d);
            return out;
        }

        /// Row-major flattening: dimension 0 varies slowest.
        std::size_t index(const FeatureVector& y) const
        {
            detail::check_feature(y, dims());
            std::size_t idx = 0;
            for (Eigen::Index d = 0; d < dims(); ++d)
                idx = idx * _cells[static_cast<std::size_t>(d)] + bin(y, d);
            return idx;
        }

        std::vector<std::size_t> unravel(std::size_t index) const
        {
            std::vector<std::size_t> out(_cells.size());
            for (std::size_t d = _cells.size(); d-- > 0;) {
                out[d] = index % _cells[d];
                index /= _cells[d];
            }
            return out;
        }

        FeatureVector cell_center(std::size_t index) const
        {
            const auto c = unravel(index);
            FeatureVector center(dims());
            for (Eigen::Index d = 0; d < dims(); ++d) {
                const double width = (_upper(d) - _lower(d)) / static_cast<double>(_cells[static_cast<std::size_t>(d)]);
                center(d) = _lower(d) + (static_cast<double>(c[static_cast<std::size_t>(d)]) + 0.5) * width;
            }
            return center;
        }

    private:
        Vector _lower, _upper;
        std::vector<std::size_t> _cells;
        std::size_t _total = 0;
    };

    /// Nearest-centroid cells (ties to the lowest centroid index).
    class CvtTessellation {
    public:
        CvtTessellation(Matrix centroids, Vector lower, Vector upper)
            : _centroids(std::move(centroids)), _lower(std::move(lower)), _upper(std::move(upper))
        {
            detail::check_bounds(_lower, _upper);
            if (_centroids.rows() == 0 || _centroids.cols() != _lower.size())
                throw InvalidArgument("CvtTessellation: centroid matrix must be l x m with m matching the bounds");
            _lookup = NearestScanner(_centroids);
        }

        std::size_t cell_count() const { return static_cast<std::size_t>(_centroids.rows()); }
        Eigen::Index dims() const { return _centroids.cols(); }
        const Matrix& centroids() const { return _centroids; }
        const Vector& lower() const { return _lower; }
        const Vector& upper() const { return _upper; }

        std::size_t index(const FeatureVector& y) const
        {
            detail::check_feature(y, dims());
            return _lookup.nearest(y.data());
        }

    private:
        Matrix _centroids; // l x m
        Vector _lower, _upper;
        NearestScanner _lookup;
    };

    /// k-means (Lloyd) over `sample_count` uniform samples in the box with a
    /// fixed number of iterations. The first l samples seed the centers; a
    /// center that loses all its samples keeps its previous position.
    inline CvtTessellation cvt_generate(std::size_t cells, const Vector& lower, const Vector& upper, std::size_t sample_count,
        std::size_t iterations, std::uint64_t seed)
    {
        detail::check_bounds(lower, upper);
        if (cells == 0)
            throw InvalidArgument("cvt_generate: at least one cell required");
        if (sample_count < cells)
            throw InvalidArgument("cvt_generate: sample_count must be at least the number of cells");
        if (iterations == 0)
            throw InvalidArgument("cvt_generate: at least one iteration required");

        const Eigen::Index m = lower.size();
        Rng rng = make_rng(seed, 0xc47);
        std::uniform_real_distribution<double> uniform(0., 1.);
        Matrix samples(static_cast<Eigen::Index>(sample_count), m);
        for (Eigen::Index i = 0; i < samples.rows(); ++i)
            for (Eigen::Index d = 0; d < m; ++d)
                samples(i, d) = lower(d) + uniform(rng) * (upper(d) - lower(d));

        Matrix centers = samples.topRows(static_cast<Eigen::Index>(cells));
        Matrix sums(centers.rows(), m);
        std::vector<std::size_t> counts(cells);
        std::vector<double> rows(sample_count * static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < samples.rows(); ++i)
            for (Eigen::Index d = 0; d < m; ++d)
                rows[static_cast<std::size_t>(i * m + d)] = samples(i, d);
        for (std::size_t it = 0; it < iterations; ++it) {
            const auto owner = NearestScanner(centers).nearest(rows);
            sums.setZero();
            std::fill(counts.begin(), counts.end(), 0);
            for (Eigen::Index i = 0; i < samples.rows(); ++i) {
                const std::size_t c = owner[static_cast<std::size_t>(i)];
                sums.row(static_cast<Eigen::Index>(c)) += samples.row(i);
                ++counts[c];
            }
            for (std::size_t c = 0; c < cells; ++c)
                if (counts[c] > 0)
                    centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        }
        return CvtTessellation(std::move(centers), lower, upper);
    }

    /// One centroid per line, comma separated, shortest round-trip digits.
    inline void write_centroids_csv(const Matrix& centroids, const std::filesystem::path& path)
    {
        std::ofstream out(path);
        if (!out)
            throw Error("cannot open " + path.string() + " for writing");
        for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
            for (Eigen::Index d = 0; d < centroids.cols(); ++d) {
                if (d > 0)
                    out << ',';
                out << format_double(centroids(i, d));
            }
            out << '\n';
        }
    }

    inline Matrix read_centroids_csv(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidConfig("cannot open centroid file " + path.string());
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            std::vector<double> row;
            std::size_t pos = 0;
            while (pos <= line.size()) {
                std::size_t comma = line.find(',', pos);
                if (comma == std::string::npos)
                    comma = line.size();
                std::size_t a = pos, b = comma;
                while (a < b && std::isspace(static_cast<unsigned char>(line[a])))
                    ++a;
                while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1])))
                    --b;
                double value = 0.;
                auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, value);
                if (ec != std::errc() || ptr != line.data() + b)
                    throw InvalidConfig("malformed centroid value in " + path.string() + ": '" + line.substr(a, b - a) + "'");
                row.push_back(value);
                pos = comma + 1;
            }
            if (!rows.empty() && row.size() != rows.front().size())
                throw InvalidConfig("ragged centroid file " + path.string());
            rows.push_back(std::move(row));
        }
        if (rows.empty())
            throw InvalidConfig("empty centroid file " + path.string());
        Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t d = 0; d < rows[i].size(); ++d)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
        return out;
    }

    /// Either tessellation behind one interface.
    class Tessellation {
    public:
        Tessellation(GridTessellation grid) : _impl(std::move(grid)) {}
        Tessellation(CvtTessellation cvt) : _impl(std::move(cvt)) {}

        std::size_t index(const FeatureVector& y) const
        {
            return std::visit([&](const auto& t) { return t.index(y); }, _impl);
        }
        std::size_t cell_count() const
        {
            return std::visit([](const auto& t) { return t.cell_count(); }, _impl);
        }
        Eigen::Index dims() const
        {
            return std::visit([](const auto& t) { return t.dims(); }, _impl);
        }
        const Vector& lower() const
        {
            return std::visit([](const auto& t) -> const Vector& { return t.lower(); }, _impl);
        }
        const Vector& upper() const
        {
            return std::visit([](const auto& t) -> const Vector& { return t.upper(); }, _impl);
        }

        bool is_grid() const { return std::holds_alternative<GridTessellation>(_impl); }
        const GridTessellation* grid() const { return std::get_if<GridTessellation>(&_impl); }
        const CvtTessellation* cvt() const { return std::get_if<CvtTessellation>(&_impl); }

    private:
        std::variant<GridTessellation, CvtTessellation> _impl;
    };

} // namespace dds

#endif
