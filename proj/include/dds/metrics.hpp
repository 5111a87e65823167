#ifndef DDS_METRICS_HPP
#define DDS_METRICS_HPP

#include <dds/archive.hpp>
#include <dds/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dds {

    struct MetricsSnapshot {
        std::uint64_t iteration = 0;
        std::uint64_t evaluations = 0;
        double coverage = 0.;
        double cross_entropy = 0.;
        std::size_t occupied_cells = 0;
    };

    inline double coverage(const ElitesArchive& archive)
    {
        return static_cast<double>(archive.occupied()) / static_cast<double>(archive.cell_count());
    }

    /// CE = -(1/l) sum_e ln(N_e / N_total), where unvisited cells count as
    /// one visit and N_total is the total of the smoothed counts.
    inline double cross_entropy(std::span<const std::uint64_t> visits)
    {
        if (visits.empty())
            throw UndefinedMetric("cross_entropy: no cells");
        std::uint64_t raw_total = 0;
        std::uint64_t total = 0;
        double log_sum = 0.;
        for (std::uint64_t n : visits) {
            raw_total += n;
            const std::uint64_t smoothed = n == 0 ? 1 : n;
            total += smoothed;
            if (smoothed > 1)
                log_sum += std::log(static_cast<double>(smoothed));
        }
        if (raw_total == 0)
            throw UndefinedMetric("cross_entropy: no visits recorded");
        return std::log(static_cast<double>(total)) - log_sum / static_cast<double>(visits.size());
    }

    inline double cross_entropy(const ElitesArchive& archive)
    {
        return cross_entropy(std::span<const std::uint64_t>(archive.visit_counts()));
    }

    inline MetricsSnapshot measure(const ElitesArchive& archive, std::uint64_t iteration, std::uint64_t evaluations)
    {
        return {iteration, evaluations, coverage(archive), cross_entropy(archive), archive.occupied()};
    }

    struct MeanSem {
        double mean = 0.;
        double sem = 0.;
        /// True when fewer than two values were available, so SEM is 0 by convention.
        bool degenerate = false;
    };

    /// Mean and standard error with the n-1 sample deviation.
    inline MeanSem mean_sem(std::span<const double> values)
    {
        if (values.empty())
            throw UndefinedMetric("mean_sem: no values");
        const double n = static_cast<double>(values.size());
        double mean = 0.;
        for (double v : values)
            mean += v;
        mean /= n;
        if (values.size() == 1)
            return {mean, 0., true};
        if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
            return {values.front(), 0., false};
        double ss = 0.;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        return {mean, std::sqrt(ss / (n - 1.)) / std::sqrt(n), false};
    }

    /// Final state of a trial's passive archive.
    struct ArchiveOccupancy {
        std::vector<std::uint64_t> visits;
        std::vector<bool> occupied;
    };

    struct RunRecord {
        std::uint64_t seed = 0;
        std::vector<MetricsSnapshot> history;
        ArchiveOccupancy occupancy;
        double seconds = 0.;
        std::uint64_t restarts = 0;
        std::size_t novelty_archive_size = 0;
        bool failed = false;
        std::string error;

        const MetricsSnapshot& final() const
        {
            if (history.empty())
                throw UndefinedMetric("RunRecord has no iterations");
            return history.back();
        }
    };

    struct SummaryRow {
        std::uint64_t iteration = 0;
        std::uint64_t evaluations = 0;
        MeanSem coverage, cross_entropy, occupied_cells;
        std::size_t trials = 0;
    };

    /// Per-iteration mean and SEM across the successful trials.
    inline std::vector<SummaryRow> summarize(std::span<const RunRecord> records)
    {
        std::vector<const RunRecord*> ok;
        for (const auto& r : records)
            if (!r.failed)
                ok.push_back(&r);
        if (ok.empty())
            throw UndefinedMetric("summarize: no successful trials");
        const std::size_t rows = ok.front()->history.size();
        for (const auto* r : ok)
            if (r->history.size() != rows)
                throw UndefinedMetric("summarize: trials have different lengths");

        std::vector<SummaryRow> out(rows);
        std::vector<double> cov(ok.size()), ce(ok.size()), occ(ok.size());
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t t = 0; t < ok.size(); ++t) {
                const auto& s = ok[t]->history[i];
                cov[t] = s.coverage;
                ce[t] = s.cross_entropy;
                occ[t] = static_cast<double>(s.occupied_cells);
            }
            auto& row = out[i];
            row.iteration = ok.front()->history[i].iteration;
            row.evaluations = ok.front()->history[i].evaluations;
            row.coverage = mean_sem(cov);
            row.cross_entropy = mean_sem(ce);
            row.occupied_cells = mean_sem(occ);
            row.trials = ok.size();
        }
        return out;
    }

} // namespace dds

#endif
