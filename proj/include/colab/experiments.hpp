#ifndef COLAB_EXPERIMENTS_HPP
#define COLAB_EXPERIMENTS_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "colab/asymptotics.hpp"
#include "colab/representatives.hpp"

namespace colab {

inline constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical guard tripped during a run (chart escape, rank deficiency,
/// non-finite magnitude, non-converged tail where convergence is required).
struct NumericalGuard : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment;
    EpsGrid eps_grid{};
    int q = 2;
    int n_points = 2048;
    int k_samples = 21;
    int lambda_samples = 11;
    SeriesTruncation truncation{};
    std::string output_dir = "out";
    int threads = 0;  // 0 -> all hardware threads

    void validate() const;
};

struct ExperimentResult {
    std::string name;
    // insertion-ordered so reports and summaries are stable
    std::vector<std::pair<std::string, bool>> verdicts;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<std::pair<std::string, AsymptoticFit>> fits;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
    double wall_time_s = 0.0;

    bool pass() const;
    void verdict(const std::string& key, bool value) { verdicts.emplace_back(key, value); }
    void constant(const std::string& key, double value) { constants.emplace_back(key, value); }
    void fit(const std::string& key, const AsymptoticFit& f) { fits.emplace_back(key, f); }
};

struct ExperimentInfo {
    std::string name;
    std::string description;
};

std::vector<ExperimentInfo> list_experiments();

/// Per-experiment defaults (notably the ε window each experiment probes).
ExperimentConfig default_config(const std::string& experiment);

/// Config = defaults, overlaid with a JSON file (all keys optional, unknown
/// keys rejected), overlaid with key=value overrides.
ExperimentConfig parse_config(const std::string& experiment,
                              const std::optional<std::string>& config_file,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes <output_dir>/<name>/samples.csv and summary.json. CSV bytes are a
/// pure function of the config (17-significant-digit formatting, no
/// timestamps); wall time lives in the summary only.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config);

/// Writes a structured failure summary.json (error message, config echo)
/// for runs stopped by a numerical guard.
void write_failure_summary(const ExperimentConfig& config, const std::string& message);

/// Scientific notation with 17 significant digits, '.' decimal separator.
std::string format_sci(double v);

/// Index-sharded parallel map; slot i is written by exactly one thread, so
/// results do not depend on the thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace colab

#endif
