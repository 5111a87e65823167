#ifndef DDS_ARCHIVE_HPP
#define DDS_ARCHIVE_HPP

#include <dds/common.hpp>
#include <dds/density.hpp>
#include <dds/knn_index.hpp>
#include <dds/tessellation.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace dds {

    struct Elite {
        SolutionVector solution;
        FeatureVector feature;
        double objective = 0.;
    };

    enum class AddStatus { new_cell, improved, rejected };

    struct AddResult {
        AddStatus status = AddStatus::rejected;
        /// Annealed: objective - t_e before the update. Elitist: objective
        /// minus the incumbent's objective, or the objective for a new cell.
        double value = 0.;
        std::size_t cell = 0;
    };

    /// Threshold annealing parameters (CMA-MAE style archive).
    struct Annealing {
        double learning_rate = 0.01;
        double threshold_min = 0.;
    };

    /// At most one elite per cell plus a cumulative visit count for every
    /// cell. Without annealing it is a plain elitist (MAP-Elites) archive.
    class ElitesArchive {
    public:
        explicit ElitesArchive(Tessellation tessellation, std::optional<Annealing> annealing = std::nullopt)
            : _tess(std::move(tessellation)), _annealing(annealing), _cells(_tess.cell_count()), _visits(_tess.cell_count(), 0)
        {
            if (_annealing) {
                if (!(_annealing->learning_rate >= 0. && _annealing->learning_rate <= 1.))
                    throw InvalidArgument("ElitesArchive: learning rate must lie in [0, 1]");
                _thresholds.assign(_tess.cell_count(), _annealing->threshold_min);
            }
        }

        AddResult add(const SolutionVector& solution, const FeatureVector& feature, double objective)
        {
            if (!std::isfinite(objective))
                throw InvalidArgument("ElitesArchive::add: objective must be finite");
            const std::size_t cell = _tess.index(feature);
            ++_visits[cell];
            ++_total_visits;

            auto& slot = _cells[cell];
            AddResult result;
            result.cell = cell;
            if (_annealing) {
                double& threshold = _thresholds[cell];
                result.value = objective - threshold;
                if (!(objective > threshold)) {
                    result.status = AddStatus::rejected;
                    return result;
                }
                threshold = (1. - _annealing->learning_rate) * threshold + _annealing->learning_rate * objective;
                if (!slot) {
                    _store(slot, cell, solution, feature, objective);
                    result.status = AddStatus::new_cell;
                }
                else {
                    if (objective > slot->objective)
                        _store(slot, cell, solution, feature, objective);
                    result.status = AddStatus::improved;
                }
                return result;
            }

            if (!slot) {
                _store(slot, cell, solution, feature, objective);
                result.status = AddStatus::new_cell;
                result.value = objective;
            }
            else if (objective > slot->objective) {
                result.value = objective - slot->objective;
                _store(slot, cell, solution, feature, objective);
                result.status = AddStatus::improved;
            }
            else {
                result.value = objective - slot->objective;
                result.status = AddStatus::rejected;
            }
            return result;
        }

        /// Uniformly random occupied cell's elite.
        const Elite& sample_elite(Rng& rng) const
        {
            if (_occupied.empty())
                throw InvalidArgument("ElitesArchive::sample_elite on an empty archive");
            std::uniform_int_distribution<std::size_t> pick(0, _occupied.size() - 1);
            return *_cells[_occupied[pick(rng)]];
        }

        const Tessellation& tessellation() const { return _tess; }
        std::size_t cell_count() const { return _cells.size(); }
        std::size_t occupied() const { return _occupied.size(); }
        bool empty() const { return _occupied.empty(); }
        bool is_occupied(std::size_t cell) const { return _cells.at(cell).has_value(); }
        const std::optional<Elite>& elite(std::size_t cell) const { return _cells.at(cell); }
        /// Occupied cell indices in order of first occupation.
        const std::vector<std::size_t>& occupied_cells() const { return _occupied; }
        const std::vector<std::uint64_t>& visit_counts() const { return _visits; }
        std::uint64_t total_visits() const { return _total_visits; }
        bool annealed() const { return _annealing.has_value(); }
        double threshold(std::size_t cell) const
        {
            if (!_annealing)
                throw InvalidArgument("ElitesArchive::threshold on a non-annealed archive");
            return _thresholds.at(cell);
        }

    private:
        void _store(std::optional<Elite>& slot, std::size_t cell, const SolutionVector& solution, const FeatureVector& feature, double objective)
        {
            if (!slot)
                _occupied.push_back(cell);
            slot = Elite{solution, feature, objective};
        }

        Tessellation _tess;
        std::optional<Annealing> _annealing;
        std::vector<std::optional<Elite>> _cells;
        std::vector<std::uint64_t> _visits;
        std::vector<double> _thresholds;
        std::vector<std::size_t> _occupied;
        std::uint64_t _total_visits = 0;
    };

    /// Unbounded novelty search archive: an entry is appended when its
    /// novelty against the current entries reaches the acceptance threshold.
    class NoveltyArchive {
    public:
        /// Squared distances to a candidate's nearest entries, ascending.
        using Neighbours = std::vector<double>;

        NoveltyArchive(Eigen::Index feature_dim, std::size_t k, double acceptance_threshold)
            : _dims(feature_dim), _k(k), _threshold(acceptance_threshold), _index(feature_dim > 0 ? static_cast<std::size_t>(feature_dim) : 1)
        {
            if (feature_dim <= 0)
                throw InvalidArgument("NoveltyArchive: feature dimension must be positive");
            if (k == 0)
                throw InvalidArgument("NoveltyArchive: k must be positive");
            if (!(acceptance_threshold > 0.))
                throw InvalidArgument("NoveltyArchive: acceptance threshold must be positive");
        }

        /// k nearest squared distances of each feature to the current entries.
        std::vector<Neighbours> neighbours(std::span<const FeatureVector> ys) const
        {
            std::vector<double> block;
            block.reserve(ys.size() * static_cast<std::size_t>(_dims));
            for (const auto& y : ys) {
                _check(y);
                block.insert(block.end(), y.data(), y.data() + _dims);
            }
            return _index.k_nearest_squared(block, _k);
        }

        /// Mean distance to the min(k, size) nearest entries, +inf if empty.
        /// `extra` points (e.g. the rest of a batch) join the reference set.
        double novelty(const FeatureVector& y, std::span<const FeatureVector> extra = {}) const
        {
            _check(y);
            return novelty_from(_index.k_nearest_squared(y.data(), _k), y, extra);
        }

        /// Novelty from precomputed archive neighbours plus `extra` points.
        double novelty_from(Neighbours d2, const FeatureVector& y, std::span<const FeatureVector> extra = {}) const
        {
            for (const auto& e : extra)
                d2.push_back(squared_distance(y, e));
            if (d2.empty())
                return std::numeric_limits<double>::infinity();
            if (!extra.empty()) {
                const std::size_t count = std::min(_k, d2.size());
                std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(count - 1), d2.end());
                d2.resize(count);
                std::sort(d2.begin(), d2.end());
            }
            double sum = 0.;
            for (double v : d2)
                sum += std::sqrt(v);
            return sum / static_cast<double>(d2.size());
        }

        /// Appends the entry when the archive is empty or its novelty is at
        /// least the acceptance threshold.
        bool add(const SolutionVector& solution, const FeatureVector& feature)
        {
            const SolutionVector* s = &solution;
            const FeatureVector* f = &feature;
            return add_batch(std::span<const SolutionVector>(s, 1), std::span<const FeatureVector>(f, 1)).front();
        }

        /// Sequential add() of every candidate in order. `before` may hold
        /// neighbours(features) computed against the archive as it is now;
        /// each acceptance is visible to the candidates after it.
        std::vector<bool> add_batch(std::span<const SolutionVector> solutions, std::span<const FeatureVector> features,
            const std::vector<Neighbours>* before = nullptr)
        {
            if (solutions.size() != features.size())
                throw InvalidArgument("NoveltyArchive::add_batch: solution and feature counts differ");
            std::vector<Neighbours> computed;
            if (!before) {
                computed = neighbours(features);
                before = &computed;
            }
            if (before->size() != features.size())
                throw InvalidArgument("NoveltyArchive::add_batch: neighbour count does not match the batch");
            std::vector<bool> accepted(features.size(), false);
            std::vector<FeatureVector> added;
            for (std::size_t i = 0; i < features.size(); ++i) {
                _check(features[i]);
                const double rho = novelty_from((*before)[i], features[i], added);
                if (!empty() && !(rho >= _threshold))
                    continue;
                _index.insert(features[i].data());
                _solutions.push_back(solutions[i]);
                added.push_back(features[i]);
                accepted[i] = true;
            }
            return accepted;
        }

        std::size_t size() const { return _solutions.size(); }
        bool empty() const { return _solutions.empty(); }
        std::size_t k() const { return _k; }
        double acceptance_threshold() const { return _threshold; }
        const SolutionVector& solution(std::size_t i) const { return _solutions.at(i); }
        FeatureVector feature(std::size_t i) const
        {
            if (i >= size())
                throw InvalidArgument("NoveltyArchive::feature: index out of range");
            FeatureVector f(_dims);
            for (Eigen::Index d = 0; d < _dims; ++d)
                f(d) = _index.coordinate(i, static_cast<std::size_t>(d));
            return f;
        }
        std::vector<FeatureVector> features() const
        {
            std::vector<FeatureVector> out;
            out.reserve(size());
            for (std::size_t i = 0; i < size(); ++i)
                out.push_back(feature(i));
            return out;
        }

        static double squared_distance(const FeatureVector& a, const FeatureVector& b)
        {
            double d2 = 0.;
            for (Eigen::Index d = 0; d < a.size(); ++d) {
                const double diff = a(d) - b(d);
                d2 += diff * diff;
            }
            return d2;
        }

    private:
        void _check(const FeatureVector& y) const
        {
            if (y.size() != _dims)
                throw InvalidFeature("NoveltyArchive: feature dimension mismatch");
        }

        Eigen::Index _dims;
        std::size_t _k;
        double _threshold;
        KnnScanner _index;
        std::vector<SolutionVector> _solutions;
    };

} // namespace dds

#endif
