#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "colab/experiments.hpp"

namespace {

int run_command(const std::string& name, const std::optional<std::string>& config_file,
                const std::vector<std::string>& sets, const std::optional<std::string>& out_dir,
                int threads) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& kv : sets) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos || pos == 0)
            throw colab::UsageError("--set expects key=value, got '" + kv + "'");
        overrides.emplace_back(kv.substr(0, pos), kv.substr(pos + 1));
    }
    colab::ExperimentConfig cfg = colab::parse_config(name, config_file, overrides);
    if (out_dir) cfg.output_dir = *out_dir;
    if (threads > 0) cfg.threads = threads;
    cfg.validate();

    colab::ExperimentResult result;
    try {
        result = colab::run_experiment(cfg);
    } catch (const colab::NumericalGuard& e) {
        colab::write_failure_summary(cfg, e.what());
        throw;
    }
    colab::write_outputs(result, cfg);

    std::cout << "experiment: " << result.name << "\n";
    for (const auto& [key, ok] : result.verdicts)
        std::cout << "  [" << (ok ? "pass" : "FAIL") << "] " << key << "\n";
    std::printf("  wall time: %.3f s\n", result.wall_time_s);
    std::cout << "  outputs: " << cfg.output_dir << "/" << result.name << "/{samples.csv,summary.json}"
              << std::endl;
    return result.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"colab: controlled eps->0 experiments on generalized-function representatives"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list available experiments");

    std::string name;
    std::string config_file;
    std::string out_dir;
    std::vector<std::string> sets;
    int threads = 0;
    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    run_cmd->add_option("name", name, "experiment name")->required();
    run_cmd->add_option("--config", config_file, "JSON config file");
    run_cmd->add_option("--set", sets, "override a config key (key=value), repeatable");
    run_cmd->add_option("--out", out_dir, "output root directory (default $COLAB_OUT or ./out)");
    run_cmd->add_option("--threads", threads, "worker threads (default: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& info : colab::list_experiments())
                std::printf("%-24s %s\n", info.name.c_str(), info.description.c_str());
            return 0;
        }
        return run_command(name,
                           config_file.empty() ? std::nullopt : std::make_optional(config_file),
                           sets, out_dir.empty() ? std::nullopt : std::make_optional(out_dir),
                           threads);
    } catch (const colab::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const colab::NumericalGuard& e) {
        std::cerr << "numerical guard: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
