#ifndef DDS_EXPERIMENT_HPP
#define DDS_EXPERIMENT_HPP

#include <dds/algorithms.hpp>
#include <dds/common.hpp>
#include <dds/config.hpp>
#include <dds/metrics.hpp>
#include <dds/tessellation.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace dds {

    inline constexpr const char* trial_csv_header = "iteration,evaluations,coverage,cross_entropy,occupied_cells";
    inline constexpr const char* cross_entropy_convention =
        "unvisited cells count as one visit inside the cross-entropy (additive smoothing); N_total is the smoothed total";

    namespace detail {
        inline std::ofstream open_for_writing(const std::filesystem::path& path)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw Error("cannot open " + path.string() + " for writing");
            return out;
        }
    } // namespace detail

    inline void write_trial_csv(const RunRecord& record, const std::filesystem::path& path)
    {
        auto out = detail::open_for_writing(path);
        out << trial_csv_header << '\n';
        for (const auto& s : record.history)
            out << s.iteration << ',' << s.evaluations << ',' << format_double(s.coverage) << ',' << format_double(s.cross_entropy) << ','
                << s.occupied_cells << '\n';
    }

    inline void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path)
    {
        auto out = detail::open_for_writing(path);
        out << "iteration,evaluations,trials,coverage_mean,coverage_sem,cross_entropy_mean,cross_entropy_sem,occupied_cells_mean,occupied_cells_sem\n";
        for (const auto& r : rows)
            out << r.iteration << ',' << r.evaluations << ',' << r.trials << ',' << format_double(r.coverage.mean) << ','
                << format_double(r.coverage.sem) << ',' << format_double(r.cross_entropy.mean) << ',' << format_double(r.cross_entropy.sem) << ','
                << format_double(r.occupied_cells.mean) << ',' << format_double(r.occupied_cells.sem) << '\n';
    }

    /// Writes `<stem>.csv` (cell_x, cell_y, occupied, visit_count; one row per
    /// cell) and `<stem>.pgm`, white where a cell is occupied with y growing
    /// upwards.
    inline void export_heatmap(const RunRecord& record, const Tessellation& tessellation, const std::filesystem::path& stem)
    {
        const GridTessellation* grid = tessellation.grid();
        if (grid == nullptr || grid->dims() != 2)
            throw UnsupportedExport("heatmaps need a 2-D grid archive");
        const auto& occ = record.occupancy;
        if (occ.visits.size() != grid->cell_count() || occ.occupied.size() != grid->cell_count())
            throw UnsupportedExport("record occupancy does not match the archive");

        auto csv = detail::open_for_writing(stem.string() + ".csv");
        csv << "cell_x,cell_y,occupied,visit_count\n";
        for (std::size_t i = 0; i < grid->cell_count(); ++i) {
            const auto c = grid->unravel(i);
            csv << c[0] << ',' << c[1] << ',' << (occ.occupied[i] ? 1 : 0) << ',' << occ.visits[i] << '\n';
        }

        const std::size_t nx = grid->cells_per_dim()[0], ny = grid->cells_per_dim()[1];
        auto pgm = detail::open_for_writing(stem.string() + ".pgm");
        pgm << "P2\n" << nx << ' ' << ny << "\n255\n";
        for (std::size_t row = 0; row < ny; ++row) {
            const std::size_t y = ny - 1 - row;
            for (std::size_t x = 0; x < nx; ++x)
                pgm << (x ? " " : "") << (occ.occupied[x * ny + y] ? 255 : 0);
            pgm << '\n';
        }
    }

    inline nlohmann::json experiment_metadata(const RunConfig& config, const Tessellation& tessellation, std::span<const RunRecord> records)
    {
        nlohmann::json meta;
        meta["config"] = config.echo();
        meta["csv_columns"] = trial_csv_header;
        meta["cross_entropy_convention"] = cross_entropy_convention;
        meta["log_base"] = "natural";
        nlohmann::json archive;
        archive["type"] = tessellation.is_grid() ? "grid" : "cvt";
        archive["cells"] = tessellation.cell_count();
        if (!tessellation.is_grid()) {
            archive["centroids"] = "centroids.csv";
            if (config.centroids_file.empty()) {
                archive["cvt_seed"] = config.cvt_seed;
                archive["cvt_samples"] = config.cvt_samples;
                archive["cvt_iterations"] = config.cvt_iterations;
            }
        }
        meta["archive"] = archive;
        nlohmann::json trials = nlohmann::json::array();
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            nlohmann::json t;
            t["index"] = i;
            t["seed"] = r.seed;
            t["file"] = "trial_" + std::to_string(i) + ".csv";
            t["failed"] = r.failed;
            if (r.failed) {
                t["error"] = r.error;
            }
            else {
                t["final_coverage"] = r.final().coverage;
                t["final_cross_entropy"] = r.final().cross_entropy;
                t["seconds"] = r.seconds;
                t["restarts"] = r.restarts;
                if (config.algorithm.algorithm == AlgorithmKind::ns)
                    t["novelty_archive_size"] = r.novelty_archive_size;
            }
            trials.push_back(t);
        }
        meta["trials"] = trials;
        return meta;
    }

    /// Recovers the settings echoed into a metadata file.
    inline std::map<std::string, std::string> load_metadata_config(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidConfig("cannot open " + path.string());
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(in);
            return meta.at("config").get<std::map<std::string, std::string>>();
        }
        catch (const nlohmann::json::exception& e) {
            throw InvalidConfig(path.string() + ": not a metadata file (" + e.what() + ")");
        }
    }

    /// Runs config.trials seeded trials (trial i uses seed + i) and writes
    /// the output directory. A trial that throws is recorded as failed; the
    /// others still run.
    inline std::vector<RunRecord> run_experiment(const RunConfig& config, std::ostream* log = nullptr)
    {
        validate(config);
        const auto domain = make_domain(config);
        const Tessellation tessellation = make_tessellation(config, *domain);

        const std::filesystem::path dir(config.output);
        std::filesystem::create_directories(dir);
        if (const auto* cvt = tessellation.cvt())
            write_centroids_csv(cvt->centroids(), dir / "centroids.csv");

        std::vector<RunRecord> records(config.trials);
        std::mutex log_mutex;
        std::atomic<std::size_t> next{0};
        const auto worker = [&] {
            for (std::size_t i = next++; i < config.trials; i = next++) {
                AlgorithmConfig ac = config.algorithm;
                ac.seed = config.algorithm.seed + i;
                RunRecord& r = records[i];
                try {
                    r = run_algorithm(ac, *domain, tessellation);
                }
                catch (const std::exception& e) {
                    r = RunRecord{};
                    r.seed = ac.seed;
                    r.failed = true;
                    r.error = e.what();
                }
                write_trial_csv(r, dir / ("trial_" + std::to_string(i) + ".csv"));
                if (!r.failed && tessellation.is_grid() && tessellation.dims() == 2)
                    export_heatmap(r, tessellation, dir / ("heatmap_" + std::to_string(i)));
                if (log) {
                    std::lock_guard lock(log_mutex);
                    *log << "trial " << i << " (seed " << r.seed << ") ";
                    if (r.failed)
                        *log << "failed: " << r.error << '\n';
                    else
                        *log << "coverage " << format_double(r.final().coverage) << ", cross-entropy " << format_double(r.final().cross_entropy)
                             << ", " << format_double(r.seconds) << " s\n";
                }
            }
        };
        // One worker per trial, capped by the available cores: a novelty
        // archive on multi_lp can hold millions of entries per trial.
        const std::size_t cores = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        const std::size_t workers = config.serial ? 1 : std::min(config.trials, cores);
        if (workers <= 1) {
            worker();
        }
        else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(worker);
        }

        {
            auto out = detail::open_for_writing(dir / "meta.json");
            out << experiment_metadata(config, tessellation, records).dump(2) << '\n';
        }
        const bool any_ok = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return !r.failed; });
        if (any_ok)
            write_summary_csv(summarize(records), dir / "summary.csv");
        else
            write_summary_csv({}, dir / "summary.csv");
        return records;
    }

    struct SweepPoint {
        double value = 0.;     // as given in the sweep list
        double bandwidth = 0.; // absolute bandwidth used
        std::vector<RunRecord> records;
    };

    /// Repeats the experiment once per sweep value, each in its own
    /// subdirectory, and writes sweep.csv with the final coverage and
    /// cross-entropy of every value.
    inline std::vector<SweepPoint> run_sweep(const RunConfig& config, std::ostream* log = nullptr)
    {
        if (config.sweep.empty())
            throw InvalidConfig("sweep list is empty");
        validate(config);
        const std::string prefix = config.sweep_mode == SweepMode::h0 ? "h0_" : "bandwidth_";
        std::vector<SweepPoint> points;
        for (double value : config.sweep) {
            RunConfig c = config;
            c.sweep.clear();
            c.algorithm.bandwidth = config.sweep_mode == SweepMode::h0 ? convert_bandwidth_h0(value, config) : value;
            c.output = (std::filesystem::path(config.output) / (prefix + format_double(value))).string();
            if (log)
                *log << prefix << format_double(value) << " (bandwidth " << format_double(c.algorithm.bandwidth) << ")\n";
            points.push_back({value, c.algorithm.bandwidth, run_experiment(c, log)});
        }
        auto out = detail::open_for_writing(std::filesystem::path(config.output) / "sweep.csv");
        out << (config.sweep_mode == SweepMode::h0 ? "h0" : "bandwidth")
            << ",bandwidth,trials,coverage_mean,coverage_sem,cross_entropy_mean,cross_entropy_sem\n";
        for (const auto& p : points) {
            std::vector<double> cov, ce;
            for (const auto& r : p.records)
                if (!r.failed) {
                    cov.push_back(r.final().coverage);
                    ce.push_back(r.final().cross_entropy);
                }
            out << format_double(p.value) << ',' << format_double(p.bandwidth) << ',' << cov.size();
            if (cov.empty()) {
                out << ",,,,\n";
                continue;
            }
            const auto c = mean_sem(cov), e = mean_sem(ce);
            out << ',' << format_double(c.mean) << ',' << format_double(c.sem) << ',' << format_double(e.mean) << ',' << format_double(e.sem) << '\n';
        }
        return points;
    }

} // namespace dds

#endif
