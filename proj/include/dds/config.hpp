#ifndef DDS_CONFIG_HPP
#define DDS_CONFIG_HPP

#include <dds/algorithms.hpp>
#include <dds/common.hpp>
#include <dds/domains.hpp>
#include <dds/maze.hpp>
#include <dds/tessellation.hpp>

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dds {

    enum class SweepMode { h0, bandwidth };

    /// Everything needed to reproduce an experiment.
    struct RunConfig {
        DomainKind domain = DomainKind::lp;
        std::size_t solution_dim = 100;
        std::size_t multi_features = 10; // feature count m of multi_lp
        std::string maze_file;           // empty: built-in deceptive maze

        std::string archive_kind;         // grid | cvt; empty: grid for 2-D features, cvt otherwise
        std::optional<std::size_t> archive_dims; // checked against the domain when set
        std::vector<double> archive_bounds;      // empty: domain bounds; else lo,hi or lo1,hi1,...
        std::size_t grid_cells = 100;            // per dimension
        std::size_t cvt_cells = 10000;
        std::size_t cvt_samples = 100000;
        std::size_t cvt_iterations = 50;
        std::uint64_t cvt_seed = 42;
        std::string centroids_file; // empty: generate from cvt_seed

        AlgorithmConfig algorithm;
        std::size_t trials = 10;
        std::string output = "results";
        bool serial = false;

        std::vector<double> sweep;
        SweepMode sweep_mode = SweepMode::h0;

        /// Settings as `key = value` pairs that parse back to this config.
        std::map<std::string, std::string> echo() const;
    };

    namespace detail {
        inline std::string trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r");
            return std::string(s.substr(first, last - first + 1));
        }

        template <class T>
        T parse_number(const std::string& key, const std::string& text)
        {
            T value{};
            const char* end = text.data() + text.size();
            auto [ptr, ec] = std::from_chars(text.data(), end, value);
            if (ec != std::errc() || ptr != end)
                throw InvalidConfig("key '" + key + "': cannot parse '" + text + "' as a number");
            return value;
        }

        inline bool parse_bool(const std::string& key, const std::string& text)
        {
            if (text == "true" || text == "1" || text == "yes" || text == "on")
                return true;
            if (text == "false" || text == "0" || text == "no" || text == "off")
                return false;
            throw InvalidConfig("key '" + key + "': expected true or false, got '" + text + "'");
        }

        inline std::vector<double> parse_list(const std::string& key, const std::string& text)
        {
            std::vector<double> out;
            std::stringstream in(text);
            std::string item;
            while (std::getline(in, item, ','))
                if (auto t = trim(item); !t.empty())
                    out.push_back(parse_number<double>(key, t));
            return out;
        }

        inline std::string join(const std::vector<double>& values)
        {
            std::string out;
            for (std::size_t i = 0; i < values.size(); ++i)
                out += (i ? "," : "") + format_double(values[i]);
            return out;
        }
    } // namespace detail

    /// Reads `key = value` lines. Blank lines and text after `#` are ignored;
    /// a repeated key keeps its last value.
    inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& origin = "config")
    {
        std::map<std::string, std::string> out;
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const std::string text = detail::trim(line);
            if (text.empty())
                continue;
            const auto eq = text.find('=');
            if (eq == std::string::npos)
                throw InvalidConfig(origin + ":" + std::to_string(number) + ": expected 'key = value'");
            const std::string key = detail::trim(std::string_view(text).substr(0, eq));
            if (key.empty())
                throw InvalidConfig(origin + ":" + std::to_string(number) + ": empty key");
            out[key] = detail::trim(std::string_view(text).substr(eq + 1));
        }
        return out;
    }

    inline std::map<std::string, std::string> load_key_values(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidConfig("cannot open config file " + path.string());
        return parse_key_values(in, path.string());
    }

    inline std::unique_ptr<Domain> make_domain(const RunConfig& config)
    {
        switch (config.domain) {
        case DomainKind::lp: return std::make_unique<LinearProjection>(static_cast<Eigen::Index>(config.solution_dim));
        case DomainKind::multi_lp:
            return std::make_unique<MultiFeatureLinearProjection>(static_cast<Eigen::Index>(config.solution_dim),
                static_cast<Eigen::Index>(config.multi_features));
        case DomainKind::arm: return std::make_unique<ArmRepertoire>(static_cast<Eigen::Index>(config.solution_dim));
        case DomainKind::maze:
            return std::make_unique<DeceptiveMaze>(config.maze_file.empty() ? deceptive_maze() : load_maze(config.maze_file));
        }
        throw InvalidConfig("unknown domain");
    }

    /// Absolute bandwidth for a width-relative h0 on the configured domain.
    inline double convert_bandwidth_h0(double h0, const RunConfig& config)
    {
        if (!(h0 > 0.))
            throw InvalidConfig("h0 must be positive");
        return h0 * make_domain(config)->normalization_width();
    }

    /// Builds a config from key-value settings. The domain and algorithm pick
    /// the hyperparameter-table defaults; every other key overrides them.
    /// `h0` sets the bandwidth relative to the domain's feature width.
    inline RunConfig make_run_config(const std::map<std::string, std::string>& raw)
    {
        static const std::map<std::string, std::string> aliases{
            {"domain.n", "solution_dim"},
            {"domain.m", "features"},
            {"domain.maze_file", "maze_file"},
            {"density.kernel", "kernel"},
            {"density.bandwidth", "bandwidth"},
            {"density.h0", "h0"},
            {"buffer.capacity", "buffer_size"},
            {"ns.include_batch", "ns_include_batch"},
            {"archive.kind", "archive_kind"},
            {"archive.dims", "archive_dims"},
            {"archive.cells", "archive_cells"},
            {"archive.bounds", "archive_bounds"},
        };
        std::map<std::string, std::string> values;
        for (const auto& [key, text] : raw) {
            const auto alias = aliases.find(key);
            const std::string& name = alias == aliases.end() ? key : alias->second;
            if (values.count(name))
                throw InvalidConfig("key '" + key + "' given twice under different names");
            values[name] = text;
        }

        RunConfig c;
        const auto get = [&](const char* key) -> std::optional<std::string> {
            auto it = values.find(key);
            return it == values.end() ? std::nullopt : std::optional<std::string>(it->second);
        };
        if (auto v = get("domain"))
            c.domain = parse_domain(*v);
        AlgorithmKind algorithm = AlgorithmKind::dds_kde;
        if (auto v = get("algorithm"))
            algorithm = parse_algorithm(*v);
        c.algorithm = default_config(algorithm, c.domain);
        if (c.domain == DomainKind::maze) {
            c.trials = 3;
            c.solution_dim = maze_parameters;
        }

        auto& a = c.algorithm;
        std::optional<double> h0;
        for (const auto& [key, text] : values) {
            using detail::parse_bool;
            using detail::parse_number;
            if (key == "domain" || key == "algorithm")
                continue;
            else if (key == "solution_dim")
                c.solution_dim = parse_number<std::size_t>(key, text);
            else if (key == "features")
                c.multi_features = parse_number<std::size_t>(key, text);
            else if (key == "maze_file")
                c.maze_file = text;
            else if (key == "archive_kind") {
                if (text != "grid" && text != "cvt")
                    throw InvalidConfig("archive kind must be grid or cvt");
                c.archive_kind = text;
            }
            else if (key == "archive_dims")
                c.archive_dims = parse_number<std::size_t>(key, text);
            else if (key == "archive_bounds")
                c.archive_bounds = detail::parse_list(key, text);
            else if (key == "archive_cells")
                continue; // resolved below, once the archive kind is known
            else if (key == "grid_cells")
                c.grid_cells = parse_number<std::size_t>(key, text);
            else if (key == "cvt_cells")
                c.cvt_cells = parse_number<std::size_t>(key, text);
            else if (key == "cvt_samples")
                c.cvt_samples = parse_number<std::size_t>(key, text);
            else if (key == "cvt_iterations")
                c.cvt_iterations = parse_number<std::size_t>(key, text);
            else if (key == "cvt_seed")
                c.cvt_seed = parse_number<std::uint64_t>(key, text);
            else if (key == "centroids")
                c.centroids_file = text;
            else if (key == "trials")
                c.trials = parse_number<std::size_t>(key, text);
            else if (key == "seed")
                a.seed = parse_number<std::uint64_t>(key, text);
            else if (key == "output")
                c.output = text;
            else if (key == "serial")
                c.serial = parse_bool(key, text);
            else if (key == "sweep")
                c.sweep = detail::parse_list(key, text);
            else if (key == "sweep_mode") {
                if (text == "h0")
                    c.sweep_mode = SweepMode::h0;
                else if (text == "bandwidth")
                    c.sweep_mode = SweepMode::bandwidth;
                else
                    throw InvalidConfig("sweep_mode must be h0 or bandwidth");
            }
            else if (key == "iterations")
                a.iterations = parse_number<std::size_t>(key, text);
            else if (key == "emitters")
                a.emitters = parse_number<std::size_t>(key, text);
            else if (key == "batch_size")
                a.batch_size = parse_number<std::size_t>(key, text);
            else if (key == "sigma0")
                a.sigma0 = parse_number<double>(key, text);
            else if (key == "bandwidth")
                a.bandwidth = parse_number<double>(key, text);
            else if (key == "h0")
                h0 = parse_number<double>(key, text);
            else if (key == "kernel")
                a.kernel = parse_kernel(text);
            else if (key == "buffer_size")
                a.buffer_capacity = parse_number<std::size_t>(key, text);
            else if (key == "k")
                a.k = parse_number<std::size_t>(key, text);
            else if (key == "acceptance_threshold")
                a.acceptance_threshold = parse_number<double>(key, text);
            else if (key == "ns_include_batch")
                a.ns_include_batch = parse_bool(key, text);
            else if (key == "learning_rate")
                a.learning_rate = parse_number<double>(key, text);
            else if (key == "threshold_min")
                a.threshold_min = parse_number<double>(key, text);
            else if (key == "me_patience")
                a.me_patience = parse_number<std::size_t>(key, text);
            else if (key == "sigma_iso")
                a.sigma_iso = parse_number<double>(key, text);
            else if (key == "sigma_line")
                a.sigma_line = parse_number<double>(key, text);
            else if (key == "cma.c_sigma")
                a.cma.c_sigma = parse_number<double>(key, text);
            else if (key == "cma.d_sigma")
                a.cma.d_sigma = parse_number<double>(key, text);
            else if (key == "cma.c_c")
                a.cma.c_c = parse_number<double>(key, text);
            else if (key == "cma.c_1")
                a.cma.c_1 = parse_number<double>(key, text);
            else if (key == "cma.c_mu")
                a.cma.c_mu = parse_number<double>(key, text);
            else if (key == "restart.min_scale")
                a.restart.min_scale = parse_number<double>(key, text);
            else if (key == "restart.max_condition")
                a.restart.max_condition = parse_number<double>(key, text);
            else
                throw InvalidConfig("unknown config key '" + key + "'");
        }
        if (auto it = values.find("archive_cells"); it != values.end()) {
            const auto cells = detail::parse_number<std::size_t>(it->first, it->second);
            const bool cvt = c.archive_kind == "cvt" || (c.archive_kind.empty() && make_domain(c)->feature_dim() != 2);
            (cvt ? c.cvt_cells : c.grid_cells) = cells;
        }
        if (h0) {
            if (values.count("bandwidth"))
                throw InvalidConfig("set either bandwidth or h0, not both");
            a.bandwidth = convert_bandwidth_h0(*h0, c);
        }
        return c;
    }

    /// Archive bounds: the domain's feature box unless overridden.
    inline std::pair<Vector, Vector> archive_bounds(const RunConfig& config, const Domain& domain)
    {
        Vector lower = domain.feature_lower(), upper = domain.feature_upper();
        const auto& b = config.archive_bounds;
        const auto m = static_cast<std::size_t>(domain.feature_dim());
        if (b.size() == 2) {
            lower.setConstant(b[0]);
            upper.setConstant(b[1]);
        }
        else if (b.size() == 2 * m) {
            for (std::size_t d = 0; d < m; ++d) {
                lower(static_cast<Eigen::Index>(d)) = b[2 * d];
                upper(static_cast<Eigen::Index>(d)) = b[2 * d + 1];
            }
        }
        else if (!b.empty()) {
            throw InvalidConfig("archive bounds need 2 or 2*m values");
        }
        for (Eigen::Index d = 0; d < lower.size(); ++d)
            if (!(lower(d) < upper(d)))
                throw InvalidConfig("archive bounds must satisfy lower < upper");
        return {lower, upper};
    }

    inline bool uses_grid(const RunConfig& config, const Domain& domain)
    {
        return config.archive_kind.empty() ? domain.feature_dim() == 2 : config.archive_kind == "grid";
    }

    /// Grid archive for 2-D feature spaces, CVT archive otherwise, unless
    /// the archive kind is set explicitly.
    inline Tessellation make_tessellation(const RunConfig& config, const Domain& domain)
    {
        const auto [lower, upper] = archive_bounds(config, domain);
        if (uses_grid(config, domain))
            return GridTessellation(lower, upper, std::vector<std::size_t>(static_cast<std::size_t>(domain.feature_dim()), config.grid_cells));
        if (!config.centroids_file.empty()) {
            Matrix centroids = read_centroids_csv(config.centroids_file);
            if (centroids.cols() != domain.feature_dim())
                throw InvalidConfig("centroid file dimension does not match the domain");
            return CvtTessellation(std::move(centroids), lower, upper);
        }
        return cvt_generate(config.cvt_cells, lower, upper, config.cvt_samples, config.cvt_iterations, config.cvt_seed);
    }

    /// Cross-field checks, run before any trial starts.
    inline void validate(const RunConfig& config)
    {
        config.algorithm.validate();
        if (config.trials == 0)
            throw InvalidConfig("trials must be positive");
        if (config.grid_cells == 0 || config.cvt_cells == 0)
            throw InvalidConfig("archive must have at least one cell");
        if (config.cvt_samples < config.cvt_cells)
            throw InvalidConfig("cvt_samples must be at least cvt_cells");
        if (config.domain == DomainKind::maze && config.solution_dim != maze_parameters)
            throw InvalidConfig("the maze controller has a fixed parameter count of " + std::to_string(maze_parameters));
        for (double v : config.sweep)
            if (!(v > 0.))
                throw InvalidConfig("sweep values must be positive");
        const auto domain = make_domain(config); // throws on dimension mismatches
        if (config.archive_dims && *config.archive_dims != static_cast<std::size_t>(domain->feature_dim()))
            throw InvalidConfig("archive has " + std::to_string(*config.archive_dims) + " dimensions but the " + std::string(domain->name()) +
                " domain produces " + std::to_string(domain->feature_dim()) + " features");
        archive_bounds(config, *domain);
        if (!config.centroids_file.empty() && uses_grid(config, *domain))
            throw InvalidConfig("centroids are only used by CVT archives");
    }

    inline std::map<std::string, std::string> RunConfig::echo() const
    {
        const auto& a = algorithm;
        std::map<std::string, std::string> out{
            {"domain", std::string(to_string(domain))},
            {"algorithm", std::string(to_string(a.algorithm))},
            {"solution_dim", std::to_string(solution_dim)},
            {"features", std::to_string(multi_features)},
            {"grid_cells", std::to_string(grid_cells)},
            {"cvt_cells", std::to_string(cvt_cells)},
            {"cvt_samples", std::to_string(cvt_samples)},
            {"cvt_iterations", std::to_string(cvt_iterations)},
            {"cvt_seed", std::to_string(cvt_seed)},
            {"trials", std::to_string(trials)},
            {"seed", std::to_string(a.seed)},
            {"output", output},
            {"serial", serial ? "true" : "false"},
            {"sweep_mode", sweep_mode == SweepMode::h0 ? "h0" : "bandwidth"},
            {"iterations", std::to_string(a.iterations)},
            {"emitters", std::to_string(a.emitters)},
            {"batch_size", std::to_string(a.batch_size)},
            {"sigma0", format_double(a.sigma0)},
            {"bandwidth", format_double(a.bandwidth)},
            {"kernel", std::string(to_string(a.kernel))},
            {"buffer_size", std::to_string(a.buffer_capacity)},
            {"k", std::to_string(a.k)},
            {"acceptance_threshold", format_double(a.acceptance_threshold)},
            {"ns_include_batch", a.ns_include_batch ? "true" : "false"},
            {"learning_rate", format_double(a.learning_rate)},
            {"threshold_min", format_double(a.threshold_min)},
            {"me_patience", std::to_string(a.me_patience)},
            {"sigma_iso", format_double(a.sigma_iso)},
            {"sigma_line", format_double(a.sigma_line)},
        };
        if (!maze_file.empty())
            out["maze_file"] = maze_file;
        if (!centroids_file.empty())
            out["centroids"] = centroids_file;
        if (!sweep.empty())
            out["sweep"] = detail::join(sweep);
        if (!archive_kind.empty())
            out["archive_kind"] = archive_kind;
        if (archive_dims)
            out["archive_dims"] = std::to_string(*archive_dims);
        if (!archive_bounds.empty())
            out["archive_bounds"] = detail::join(archive_bounds);
        const auto put = [&](const char* key, const std::optional<double>& v) {
            if (v)
                out[key] = format_double(*v);
        };
        put("cma.c_sigma", a.cma.c_sigma);
        put("cma.d_sigma", a.cma.d_sigma);
        put("cma.c_c", a.cma.c_c);
        put("cma.c_1", a.cma.c_1);
        put("cma.c_mu", a.cma.c_mu);
        out["restart.min_scale"] = format_double(a.restart.min_scale);
        out["restart.max_condition"] = format_double(a.restart.max_condition);
        return out;
    }

} // namespace dds

#endif
