// Command-line entry point: synth, cluster, patterns, evaluate, run-all.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "areaprof/config.hpp"
#include "areaprof/errors.hpp"
#include "areaprof/pipeline.hpp"

namespace {

using areaprof::RunConfig;
namespace pipeline = areaprof::pipeline;

struct RunOptions {
    std::string config;
    std::map<std::string, std::string> overrides;
};

void add_run_options(CLI::App& cmd, RunOptions& opts) {
    cmd.add_option("--config", opts.config, "Run configuration (INI)");
    for (const auto& key : areaprof::run_config_keys()) {
        std::string flag = "--" + key;
        for (auto& c : flag) {
            if (c == '_') c = '-';
        }
        cmd.add_option_function<std::string>(
            flag, [&opts, key](const std::string& v) { opts.overrides[key] = v; }, "Override `" + key + "`");
    }
}

int build_config(const RunOptions& opts, RunConfig& cfg) {
    try {
        cfg = opts.config.empty() ? RunConfig{} : RunConfig::load(opts.config);
        for (const auto& [key, value] : opts.overrides) cfg.set(key, value);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pipeline::kExitInput;
    }
    return pipeline::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Area profiling by POI activity, spectral clustering and call-volume patterns"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string synth_out = "synth";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic city, towers and call records");
    synth->add_option("--config,--spec", spec_path, "Synthetic dataset spec (INI)")->required();
    synth->add_option("--out", synth_out, "Output directory");

    RunOptions cluster_opts, patterns_opts, evaluate_opts, all_opts;
    auto* cluster = app.add_subcommand("cluster", "Profile grid cells and cluster them");
    add_run_options(*cluster, cluster_opts);
    auto* patterns = app.add_subcommand("patterns", "Allocate calls to clusters; profiles, stats, anomalies");
    add_run_options(*patterns, patterns_opts);
    auto* evaluate = app.add_subcommand("evaluate", "Silhouette quality of clusters over call patterns");
    add_run_options(*evaluate, evaluate_opts);
    auto* run_all = app.add_subcommand("run-all", "cluster, patterns and evaluate in sequence");
    add_run_options(*run_all, all_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? pipeline::kExitOk : pipeline::kExitInput;
    }

    if (synth->parsed()) return pipeline::cmd_synth(spec_path, synth_out, std::cout);

    RunConfig cfg;
    auto dispatch = [&](const RunOptions& opts, int (*cmd)(const RunConfig&, std::ostream&)) {
        const int code = build_config(opts, cfg);
        return code != pipeline::kExitOk ? code : cmd(cfg, std::cout);
    };
    if (cluster->parsed()) return dispatch(cluster_opts, pipeline::cmd_cluster);
    if (patterns->parsed()) return dispatch(patterns_opts, pipeline::cmd_patterns);
    if (evaluate->parsed()) return dispatch(evaluate_opts, pipeline::cmd_evaluate);
    return dispatch(all_opts, pipeline::cmd_run_all);
}
