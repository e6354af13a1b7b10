#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "colab/experiments.hpp"

using namespace colab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("colab_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("experiment registry lists twelve entries with descriptions") {
    const auto infos = list_experiments();
    CHECK(infos.size() == 12);
    for (const auto& info : infos) {
        CHECK_FALSE(info.name.empty());
        CHECK_FALSE(info.description.empty());
    }
    CHECK_THROWS_AS((void)default_config("does_not_exist"), UsageError);
}

TEST_CASE("config parsing: defaults, file, overrides, rejects") {
    const auto base = parse_config("scaling_identities", std::nullopt, {});
    CHECK(base.experiment == "scaling_identities");
    CHECK(base.n_points == 2048);

    const fs::path dir = fresh_dir("config");
    const fs::path file = dir / "cfg.json";
    {
        std::ofstream out(file);
        out << R"({"eps_min": 1e-5, "n_points": 1024})";
    }
    const auto fromfile = parse_config("p_in_Ne", file.string(), {});
    CHECK(fromfile.eps_grid.eps_min == 1e-5);
    CHECK(fromfile.n_points == 1024);

    const auto overridden =
        parse_config("p_in_Ne", file.string(), {{"eps_min", "1e-4"}, {"threads", "2"}});
    CHECK(overridden.eps_grid.eps_min == 1e-4);
    CHECK(overridden.threads == 2);

    {
        std::ofstream out(file);
        out << R"({"epsilon_minimum": 1})";
    }
    CHECK_THROWS_WITH_AS((void)parse_config("p_in_Ne", file.string(), {}),
                         doctest::Contains("epsilon_minimum"), UsageError);

    CHECK_THROWS_AS(
        (void)parse_config("p_in_Ne", std::nullopt, {{"eps_min", "0.5"}, {"eps_max", "0.1"}}),
        UsageError);
    CHECK_THROWS_AS((void)parse_config("p_in_Ne", std::nullopt, {{"n_points", "63"}}),
                    UsageError);
    CHECK_THROWS_AS((void)parse_config("nope", std::nullopt, {}), UsageError);
}

TEST_CASE("empty config file keeps all defaults") {
    const fs::path dir = fresh_dir("empty_config");
    const fs::path file = dir / "empty.json";
    { std::ofstream out(file); }
    const auto cfg = parse_config("scaling_identities", file.string(), {});
    CHECK(cfg.n_points == 2048);
    CHECK(cfg.eps_grid.n == 40);
}

TEST_CASE("string-valued overrides pass through") {
    const auto cfg = parse_config("r_examples", std::nullopt, {{"output_dir", "/tmp/somewhere"}});
    CHECK(cfg.output_dir == "/tmp/somewhere");
}

TEST_CASE("COLAB_OUT seeds the default output root") {
    ::setenv("COLAB_OUT", "/tmp/colab_env_root", 1);
    const auto cfg = default_config("r_examples");
    ::unsetenv("COLAB_OUT");
    CHECK(cfg.output_dir == "/tmp/colab_env_root");
}

TEST_CASE("format_sci carries 17 significant digits") {
    CHECK(format_sci(1.0) == "1.0000000000000000e+00");
    CHECK(format_sci(0.1) == "1.0000000000000001e-01");
}

TEST_CASE("parallel_for covers every slot exactly once, any thread count") {
    for (int threads : {1, 2, 5}) {
        std::vector<int> hits(101, 0);
        parallel_for(101, threads, [&](int i) { hits[i] += i + 1; });
        for (int i = 0; i < 101; ++i) CHECK(hits[i] == i + 1);
    }
}

TEST_CASE("scaling_identities runs, passes, and writes the documented columns") {
    ExperimentConfig cfg = default_config("scaling_identities");
    cfg.output_dir = fresh_dir("scaling").string();
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass());
    write_outputs(res, cfg);

    const std::string csv = slurp(fs::path(cfg.output_dir) / "scaling_identities/samples.csv");
    const std::string header = csv.substr(0, csv.find('\n'));
    for (const char* col : {"eps", "k", "lhs", "rhs", "rel_err"})
        CHECK(header.find(col) != std::string::npos);

    const std::string summary = slurp(fs::path(cfg.output_dir) / "scaling_identities/summary.json");
    CHECK(summary.find("\"pass\": true") != std::string::npos);
    CHECK(summary.find("\"config\"") != std::string::npos);
    CHECK(summary.find("\"tool_version\"") != std::string::npos);
}

TEST_CASE("identical configs reproduce identical csv bytes across thread counts") {
    ExperimentConfig cfg = default_config("iota_sigma_order");
    cfg.eps_grid.n = 16;  // keep it quick
    cfg.output_dir = fresh_dir("det_a").string();
    cfg.threads = 1;
    write_outputs(run_experiment(cfg), cfg);

    ExperimentConfig cfg2 = cfg;
    cfg2.output_dir = fresh_dir("det_b").string();
    cfg2.threads = 4;
    write_outputs(run_experiment(cfg2), cfg2);

    const std::string a = slurp(fs::path(cfg.output_dir) / "iota_sigma_order/samples.csv");
    const std::string b = slurp(fs::path(cfg2.output_dir) / "iota_sigma_order/samples.csv");
    CHECK(a == b);
}

TEST_CASE("run_experiment turns non-converged series tails into a guard") {
    ExperimentConfig cfg = default_config("q_counterexample");
    cfg.truncation.k_max = 5;  // far too shallow for the witness evaluations
    cfg.output_dir = fresh_dir("guard").string();
    CHECK_THROWS_AS((void)run_experiment(cfg), NumericalGuard);

    write_failure_summary(cfg, "series tail not converged");
    const std::string summary = slurp(fs::path(cfg.output_dir) / "q_counterexample/summary.json");
    CHECK(summary.find("\"pass\": false") != std::string::npos);
    CHECK(summary.find("series tail not converged") != std::string::npos);
    CHECK(summary.find("\"config\"") != std::string::npos);
}

TEST_CASE("sine_shift_obstruction experiment passes quickly") {
    ExperimentConfig cfg = default_config("sine_shift_obstruction");
    cfg.output_dir = fresh_dir("sine").string();
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass());
    CHECK(res.wall_time_s < 5.0);
}

TEST_CASE("r_examples experiment passes") {
    ExperimentConfig cfg = default_config("r_examples");
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass());
}
