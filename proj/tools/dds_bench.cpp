// Experiment runner: dds_bench --domain lp --algorithm dds_kde --trials 3 --output out/
#include <dds/dds.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv)
{
    CLI::App app{"Run seeded diversity-optimization experiments and write CSV logs."};

    std::string config_path;
    std::map<std::string, std::string> flags;
    std::vector<std::string> settings;
    const auto text_flag = [&](const char* name, const char* key, const char* help) {
        app.add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };

    app.add_option("--config", config_path, "key = value file, or a meta.json from an earlier run")->check(CLI::ExistingFile);
    text_flag("--domain", "domain", "lp | multi_lp | arm | maze");
    text_flag("--algorithm", "algorithm", "dds_kde | ns | cma_mae | cma_me | map_elites_line");
    text_flag("--trials", "trials", "number of trials");
    text_flag("--seed", "seed", "base seed; trial i uses seed + i");
    text_flag("--iterations", "iterations", "iterations per trial");
    text_flag("--emitters", "emitters", "emitters per iteration");
    text_flag("--batch-size", "batch_size", "solutions per emitter per iteration");
    text_flag("--bandwidth", "bandwidth", "KDE bandwidth (absolute)");
    text_flag("--h0", "h0", "KDE bandwidth relative to the feature width");
    text_flag("--sweep", "sweep", "comma-separated bandwidth values, one experiment each");
    text_flag("--sweep-mode", "sweep_mode", "h0 (default) or bandwidth: how --sweep values are read");
    text_flag("--output", "output", "output directory");
    app.add_flag_callback("--serial", [&flags] { flags["serial"] = "true"; }, "run trials one after another");
    app.add_option("--set", settings, "extra key=value settings, as in a config file");

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> values;
        if (!config_path.empty())
            values = std::filesystem::path(config_path).extension() == ".json" ? dds::load_metadata_config(config_path)
                                                                              : dds::load_key_values(config_path);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw dds::InvalidConfig("--set expects key=value, got '" + s + "'");
            values[dds::detail::trim(s.substr(0, eq))] = dds::detail::trim(s.substr(eq + 1));
        }
        for (const auto& [k, v] : flags)
            values[k] = v;
        // A bandwidth from the command line replaces an h0 from the file and vice versa.
        if (flags.count("bandwidth") && !flags.count("h0"))
            values.erase("h0");
        if (flags.count("h0") && !flags.count("bandwidth"))
            values.erase("bandwidth");

        const dds::RunConfig config = dds::make_run_config(values);
        std::vector<dds::RunRecord> all;
        if (config.sweep.empty()) {
            all = dds::run_experiment(config, &std::cout);
        }
        else {
            for (auto& point : dds::run_sweep(config, &std::cout))
                all.insert(all.end(), point.records.begin(), point.records.end());
        }
        std::cout << "results in " << config.output << '\n';
        for (const auto& r : all)
            if (r.failed)
                return 2;
        return 0;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
