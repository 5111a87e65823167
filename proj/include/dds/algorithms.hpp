#ifndef DDS_ALGORITHMS_HPP
#define DDS_ALGORITHMS_HPP

#include <dds/archive.hpp>
#include <dds/buffer.hpp>
#include <dds/cma_es.hpp>
#include <dds/common.hpp>
#include <dds/density.hpp>
#include <dds/domains.hpp>
#include <dds/metrics.hpp>
#include <dds/tessellation.hpp>

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dds {

    enum class AlgorithmKind { dds_kde, ns, cma_mae, cma_me, map_elites_line };
    enum class DomainKind { lp, multi_lp, arm, maze };

    inline std::string_view to_string(AlgorithmKind a)
    {
        switch (a) {
        case AlgorithmKind::dds_kde: return "dds_kde";
        case AlgorithmKind::ns: return "ns";
        case AlgorithmKind::cma_mae: return "cma_mae";
        case AlgorithmKind::cma_me: return "cma_me";
        case AlgorithmKind::map_elites_line: return "map_elites_line";
        }
        return "?";
    }

    inline AlgorithmKind parse_algorithm(std::string_view s)
    {
        for (auto a : {AlgorithmKind::dds_kde, AlgorithmKind::ns, AlgorithmKind::cma_mae, AlgorithmKind::cma_me, AlgorithmKind::map_elites_line})
            if (s == to_string(a))
                return a;
        throw InvalidConfig("unknown algorithm '" + std::string(s) + "' (expected dds_kde|ns|cma_mae|cma_me|map_elites_line)");
    }

    inline std::string_view to_string(DomainKind d)
    {
        switch (d) {
        case DomainKind::lp: return "lp";
        case DomainKind::multi_lp: return "multi_lp";
        case DomainKind::arm: return "arm";
        case DomainKind::maze: return "maze";
        }
        return "?";
    }

    inline DomainKind parse_domain(std::string_view s)
    {
        for (auto d : {DomainKind::lp, DomainKind::multi_lp, DomainKind::arm, DomainKind::maze})
            if (s == to_string(d))
                return d;
        throw InvalidConfig("unknown domain '" + std::string(s) + "' (expected lp|multi_lp|arm|maze)");
    }

    struct AlgorithmConfig {
        AlgorithmKind algorithm = AlgorithmKind::dds_kde;
        std::size_t emitters = 15;
        std::size_t batch_size = 36;
        std::size_t iterations = 5000;
        std::uint64_t seed = 0;

        double sigma0 = 1.5;

        // DDS-KDE
        double bandwidth = 25.6;
        KernelKind kernel = KernelKind::gaussian;
        std::size_t buffer_capacity = 10000;

        // Novelty search
        std::size_t k = 100;
        double acceptance_threshold = 0.042 * 512.;
        bool ns_include_batch = false;

        // CMA-MAE
        double learning_rate = 0.01;
        double threshold_min = 0.;

        // CMA-ME
        std::size_t me_patience = 5;

        // MAP-Elites (line)
        double sigma_iso = 0.5;
        double sigma_line = 0.2;

        CmaEsConstants cma;
        RestartThresholds restart;

        void validate() const
        {
            if (emitters == 0 || iterations == 0)
                throw InvalidConfig("emitters and iterations must be positive");
            if (batch_size < 2)
                throw InvalidConfig("batch size must be at least 2");
            if (!(sigma0 > 0.))
                throw InvalidConfig("sigma0 must be positive");
            if (!(bandwidth > 0.))
                throw InvalidConfig("bandwidth must be positive");
            if (buffer_capacity == 0)
                throw InvalidConfig("buffer capacity must be positive");
            if (k == 0)
                throw InvalidConfig("k must be positive");
            if (!(acceptance_threshold > 0.))
                throw InvalidConfig("acceptance threshold must be positive");
            if (!(learning_rate >= 0. && learning_rate <= 1.))
                throw InvalidConfig("learning rate must lie in [0, 1]");
            if (me_patience == 0)
                throw InvalidConfig("CMA-ME patience must be positive");
            if (!(sigma_iso >= 0.) || !(sigma_line >= 0.))
                throw InvalidConfig("MAP-Elites variances must be non-negative");
        }
    };

    /// Hyperparameter table defaults for one algorithm on one domain.
    inline AlgorithmConfig default_config(AlgorithmKind algorithm, DomainKind domain)
    {
        const auto idx = static_cast<std::size_t>(domain);
        AlgorithmConfig c;
        c.algorithm = algorithm;
        constexpr double dds_sigma[] = {1.5, 1.5, 0.5, 1.5};
        constexpr double dds_h[] = {25.6, 2.56, 10., 0.01};
        constexpr double ns_threshold[] = {0.042 * 512., 0.042 * 51.2, 0.042 * 200., 0.042};
        constexpr double mae_sigma[] = {0.5, 0.5, 0.2, 0.5};
        constexpr double iso[] = {0.5, 0.5, 0.1, 0.1};
        c.bandwidth = dds_h[idx];
        c.acceptance_threshold = ns_threshold[idx];
        c.sigma_iso = iso[idx];
        c.sigma_line = 0.2;
        switch (algorithm) {
        case AlgorithmKind::dds_kde: c.sigma0 = dds_sigma[idx]; break;
        case AlgorithmKind::ns: c.sigma0 = 0.5; break;
        case AlgorithmKind::cma_mae:
        case AlgorithmKind::cma_me: c.sigma0 = mae_sigma[idx]; break;
        case AlgorithmKind::map_elites_line: c.sigma0 = iso[idx]; break;
        }
        return c;
    }

    /// Indices of `scores` ordered best first; ties keep sample order.
    inline std::vector<std::size_t> rank_ascending(std::span<const double> scores)
    {
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        return order;
    }

    inline std::vector<std::size_t> rank_descending(std::span<const double> scores)
    {
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        return order;
    }

    /// theta_i + sigma_iso * N(0, I) + sigma_line * N(0, 1) * (theta_j - theta_i).
    inline SolutionVector iso_line_child(const SolutionVector& parent, const SolutionVector& other, double sigma_iso, double sigma_line, Rng& rng)
    {
        std::normal_distribution<double> normal(0., 1.);
        SolutionVector child(parent.size());
        for (Eigen::Index i = 0; i < child.size(); ++i)
            child(i) = normal(rng);
        const double line = normal(rng);
        child = parent + sigma_iso * child + (sigma_line * line) * (other - parent);
        return child;
    }

    using IterationCallback = std::function<void(const MetricsSnapshot&)>;

    namespace detail {

        // State shared by every driver: the passive archive that measures
        // the run, evaluation accounting and the metrics log.
        class Harness {
        public:
            Harness(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback)
                : config(config), domain(domain), passive(tessellation), rng(make_rng(config.seed, 1)), _callback(std::move(callback))
            {
                config.validate();
                if (tessellation.dims() != domain.feature_dim())
                    throw InvalidConfig("archive dimension " + std::to_string(tessellation.dims()) + " does not match the domain's feature dimension " +
                        std::to_string(domain.feature_dim()));
                record.seed = config.seed;
                record.history.reserve(config.iterations);
                _start = std::chrono::steady_clock::now();
            }

            std::vector<FeatureVector> evaluate(std::span<const SolutionVector> solutions)
            {
                std::vector<FeatureVector> out;
                out.reserve(solutions.size());
                for (const auto& s : solutions)
                    out.push_back(domain.evaluate(s));
                evaluations += solutions.size();
                return out;
            }

            AddResult insert_passive(const SolutionVector& s, const FeatureVector& y) { return passive.add(s, y, domain.objective(s)); }

            void end_iteration(std::size_t iteration)
            {
                record.history.push_back(measure(passive, iteration, evaluations));
                if (_callback)
                    _callback(record.history.back());
            }

            RunRecord finish()
            {
                record.occupancy.visits = passive.visit_counts();
                record.occupancy.occupied.assign(passive.cell_count(), false);
                for (std::size_t c : passive.occupied_cells())
                    record.occupancy.occupied[c] = true;
                record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - _start).count();
                return std::move(record);
            }

            const AlgorithmConfig& config;
            const Domain& domain;
            ElitesArchive passive;
            Rng rng;
            std::uint64_t evaluations = 0;
            RunRecord record;

        private:
            IterationCallback _callback;
            std::chrono::steady_clock::time_point _start;
        };

        // One CMA-ES emitter. A restart re-centres the search on a solution
        // drawn by `pick_restart` (x0 = 0 when it returns nothing).
        class CmaEmitter {
        public:
            CmaEmitter(const AlgorithmConfig& config, Eigen::Index dim)
                : _config(config), _es(SolutionVector::Zero(dim), config.sigma0, config.batch_size, config.cma, config.restart)
            {
            }

            template <class PickRestart>
            std::vector<SolutionVector> ask(Rng& rng, PickRestart&& pick_restart, std::uint64_t& restarts)
            {
                for (int attempt = 0;; ++attempt) {
                    try {
                        return _es.ask(rng);
                    }
                    catch (const RestartRequired&) {
                        if (attempt > 0)
                            throw;
                        restart(pick_restart(), restarts);
                    }
                }
            }

            void tell(std::span<const SolutionVector> solutions, std::span<const std::size_t> ranking) { _es.tell(solutions, ranking); }

            template <class PickRestart>
            void maybe_restart(PickRestart&& pick_restart, std::uint64_t& restarts, bool force = false)
            {
                if (force || _es.check_restart())
                    restart(pick_restart(), restarts);
            }

            void restart(std::optional<SolutionVector> mean, std::uint64_t& restarts)
            {
                const Eigen::Index dim = _es.dim();
                _es = CmaEs(mean.value_or(SolutionVector::Zero(dim)), _config.sigma0, _config.batch_size, _config.cma, _config.restart);
                ++restarts;
            }

            const CmaEs& optimizer() const { return _es; }

        private:
            const AlgorithmConfig& _config;
            CmaEs _es;
        };

        inline std::vector<CmaEmitter> make_emitters(const AlgorithmConfig& config, Eigen::Index dim)
        {
            std::vector<CmaEmitter> out;
            out.reserve(config.emitters);
            for (std::size_t e = 0; e < config.emitters; ++e)
                out.emplace_back(config, dim);
            return out;
        }

        inline auto elite_picker(const ElitesArchive& archive, Rng& rng)
        {
            return [&archive, &rng]() -> std::optional<SolutionVector> {
                if (archive.empty())
                    return std::nullopt;
                return archive.sample_elite(rng).solution;
            };
        }

    } // namespace detail

    /// Density descent search with a KDE over a reservoir-sampled buffer.
    inline RunRecord run_dds_kde(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        detail::Harness run(config, domain, tessellation, std::move(callback));
        FeatureBuffer buffer(config.buffer_capacity, config.seed);
        KdeEstimator density(config.bandwidth, config.kernel);
        auto emitters = detail::make_emitters(config, domain.solution_dim());
        auto pick = detail::elite_picker(run.passive, run.rng);

        for (std::size_t it = 1; it <= config.iterations; ++it) {
            for (auto& emitter : emitters) {
                const auto solutions = emitter.ask(run.rng, pick, run.record.restarts);
                const auto features = run.evaluate(solutions);
                // Before the first refresh every density is 0, so the
                // ranking falls back to sample order.
                std::vector<double> densities(solutions.size(), 0.);
                if (!density.empty())
                    densities = density.query_batch(features);
                for (std::size_t i = 0; i < solutions.size(); ++i)
                    run.insert_passive(solutions[i], features[i]);
                buffer.offer(features);
                const auto ranking = rank_ascending(densities);
                emitter.tell(solutions, ranking);
                emitter.maybe_restart(pick, run.record.restarts);
            }
            density.refresh(buffer.contents());
            run.end_iteration(it);
        }
        return run.finish();
    }

    /// Novelty search with CMA-ES emitters and an unbounded novelty archive.
    inline RunRecord run_novelty_search(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        detail::Harness run(config, domain, tessellation, std::move(callback));
        NoveltyArchive novelty(domain.feature_dim(), config.k, config.acceptance_threshold);
        auto emitters = detail::make_emitters(config, domain.solution_dim());
        auto pick = [&]() -> std::optional<SolutionVector> {
            if (novelty.empty())
                return std::nullopt;
            std::uniform_int_distribution<std::size_t> entry(0, novelty.size() - 1);
            return novelty.solution(entry(run.rng));
        };

        std::vector<FeatureVector> others;
        for (std::size_t it = 1; it <= config.iterations; ++it) {
            for (auto& emitter : emitters) {
                const auto solutions = emitter.ask(run.rng, pick, run.record.restarts);
                const auto features = run.evaluate(solutions);
                // One neighbour query per candidate serves both the ranking
                // and the sequential acceptance test.
                const auto near = novelty.neighbours(features);
                std::vector<double> scores(solutions.size());
                for (std::size_t i = 0; i < solutions.size(); ++i) {
                    if (config.ns_include_batch) {
                        others.clear();
                        for (std::size_t j = 0; j < features.size(); ++j)
                            if (j != i)
                                others.push_back(features[j]);
                        scores[i] = novelty.novelty_from(near[i], features[i], others);
                    }
                    else {
                        scores[i] = novelty.novelty_from(near[i], features[i]);
                    }
                }
                emitter.tell(solutions, rank_descending(scores));
                novelty.add_batch(solutions, features, &near);
                for (std::size_t i = 0; i < solutions.size(); ++i)
                    run.insert_passive(solutions[i], features[i]);
                emitter.maybe_restart(pick, run.record.restarts);
            }
            run.end_iteration(it);
        }
        run.record.novelty_archive_size = novelty.size();
        return run.finish();
    }

    /// CMA-MAE: improvement ranking against an annealed archive.
    inline RunRecord run_cma_mae(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        detail::Harness run(config, domain, tessellation, std::move(callback));
        ElitesArchive annealed(tessellation, Annealing{config.learning_rate, config.threshold_min});
        auto emitters = detail::make_emitters(config, domain.solution_dim());
        auto pick = detail::elite_picker(annealed, run.rng);

        for (std::size_t it = 1; it <= config.iterations; ++it) {
            for (auto& emitter : emitters) {
                const auto solutions = emitter.ask(run.rng, pick, run.record.restarts);
                const auto features = run.evaluate(solutions);
                std::vector<double> improvement(solutions.size());
                for (std::size_t i = 0; i < solutions.size(); ++i) {
                    improvement[i] = annealed.add(solutions[i], features[i], domain.objective(solutions[i])).value;
                    run.insert_passive(solutions[i], features[i]);
                }
                emitter.tell(solutions, rank_descending(improvement));
                emitter.maybe_restart(pick, run.record.restarts);
            }
            run.end_iteration(it);
        }
        return run.finish();
    }

    /// CMA-ME: new cells rank first, everything else after, each in sample
    /// order. An emitter restarts after `me_patience` batches without a new cell.
    inline RunRecord run_cma_me(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        detail::Harness run(config, domain, tessellation, std::move(callback));
        // With a constant objective the elitist archive and the passive
        // archive receive identical insertions, so one archive serves both.
        auto emitters = detail::make_emitters(config, domain.solution_dim());
        std::vector<std::size_t> stale(emitters.size(), 0);
        auto pick = detail::elite_picker(run.passive, run.rng);

        for (std::size_t it = 1; it <= config.iterations; ++it) {
            for (std::size_t e = 0; e < emitters.size(); ++e) {
                auto& emitter = emitters[e];
                const auto solutions = emitter.ask(run.rng, pick, run.record.restarts);
                const auto features = run.evaluate(solutions);
                std::vector<double> tier(solutions.size());
                bool any_new = false;
                for (std::size_t i = 0; i < solutions.size(); ++i) {
                    const bool fresh = run.insert_passive(solutions[i], features[i]).status == AddStatus::new_cell;
                    tier[i] = fresh ? 0. : 1.;
                    any_new = any_new || fresh;
                }
                emitter.tell(solutions, rank_ascending(tier));
                stale[e] = any_new ? 0 : stale[e] + 1;
                const bool exhausted = stale[e] >= config.me_patience;
                if (exhausted)
                    stale[e] = 0;
                emitter.maybe_restart(pick, run.record.restarts, exhausted);
            }
            run.end_iteration(it);
        }
        return run.finish();
    }

    /// MAP-Elites with the Iso+LineDD operator.
    inline RunRecord run_map_elites_line(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        detail::Harness run(config, domain, tessellation, std::move(callback));
        const Eigen::Index dim = domain.solution_dim();
        const SolutionVector origin = SolutionVector::Zero(dim);
        std::vector<SolutionVector> solutions(config.batch_size);

        for (std::size_t it = 1; it <= config.iterations; ++it) {
            for (std::size_t e = 0; e < config.emitters; ++e) {
                // The first iteration, and any batch that starts with fewer
                // than two elites, draws from N(x0, sigma_iso^2 I).
                const bool bootstrap = it == 1 || run.passive.occupied() < 2;
                const auto& cells = run.passive.occupied_cells();
                std::uniform_int_distribution<std::size_t> pick(0, cells.empty() ? 0 : cells.size() - 1);
                for (auto& child : solutions) {
                    if (bootstrap) {
                        child = iso_line_child(origin, origin, config.sigma_iso, 0., run.rng);
                        continue;
                    }
                    const std::size_t a = pick(run.rng);
                    std::size_t b = pick(run.rng);
                    while (b == a && cells.size() > 1)
                        b = pick(run.rng);
                    child = iso_line_child(run.passive.elite(cells[a])->solution, run.passive.elite(cells[b])->solution, config.sigma_iso,
                        config.sigma_line, run.rng);
                }
                const auto features = run.evaluate(solutions);
                for (std::size_t i = 0; i < solutions.size(); ++i)
                    run.insert_passive(solutions[i], features[i]);
            }
            run.end_iteration(it);
        }
        return run.finish();
    }

    inline RunRecord run_algorithm(const AlgorithmConfig& config, const Domain& domain, const Tessellation& tessellation, IterationCallback callback = {})
    {
        switch (config.algorithm) {
        case AlgorithmKind::dds_kde: return run_dds_kde(config, domain, tessellation, std::move(callback));
        case AlgorithmKind::ns: return run_novelty_search(config, domain, tessellation, std::move(callback));
        case AlgorithmKind::cma_mae: return run_cma_mae(config, domain, tessellation, std::move(callback));
        case AlgorithmKind::cma_me: return run_cma_me(config, domain, tessellation, std::move(callback));
        case AlgorithmKind::map_elites_line: return run_map_elites_line(config, domain, tessellation, std::move(callback));
        }
        throw InvalidConfig("unknown algorithm");
    }

} // namespace dds

#endif
