#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/dataset.hpp"
#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/learner.hpp"

namespace sn::cli {

enum ExitCode : int { kOk = 0, kProbeFail = 1, kConfigError = 2, kNumericAbort = 3 };

struct ExperimentConfig {
    std::string distribution = "gaussian";
    std::string activation = "relu";
    std::string noise = "none";
    std::size_t d = 10;
    double W = 2.0;
    double wstar_norm = 1.0;
    double eps = 1e-2;
    double delta = 0.1;
    std::optional<double> mu = 0.05;  // empty = auto (margin estimate)
    double gamma = 0.5;
    std::vector<std::uint64_t> seeds{1};

    std::optional<std::size_t> T;
    std::optional<std::size_t> N;
    std::optional<double> eta;
    std::optional<double> M;
    std::optional<double> r_eps;

    std::string project = "none";
    std::string mode = "auto";
    DeriveOptions derive;
    double stop_threshold = 0.0;
    bool wallclock = false;
    std::size_t holdout_n = 1000;
    std::size_t eval_n = 100'000;
    std::size_t margin_n = 100'000;
    std::size_t n_probes = 500;
    std::size_t n_mc = 200'000;
};

// Sets one key from its textual value. Unknown keys and malformed values throw ConfigError.
void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Flat "key = value" lines; '#' starts a comment.
void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
std::vector<std::uint64_t> parse_seeds(const std::string& text);
std::vector<double> parse_values(const std::string& text);

// Everything a single seed needs, after derivation and overrides.
struct ResolvedRun {
    std::uint64_t seed = 0;
    DistributionSpec spec;
    PlantedInstance instance;
    LearnerConfig learner;
    Mode mode = Mode::monotone;
    std::optional<double> margin_lambda;
};

ResolvedRun resolve(const ExperimentConfig& cfg, std::uint64_t seed);

struct SeedResult {
    ResolvedRun run;
    TrainResult result;
    double final_l2 = 0.0;
    double opt_certificate = 0.0;
    double final_dist_sq = 0.0;
};

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// Trace CSV text: header plus one row per (seed, iteration), 17 significant digits.
std::string trace_csv(const std::vector<SeedResult>& results);
inline constexpr const char* kTraceHeader = "seed,iter,dist_to_wstar_sq,grad_norm,l2_holdout,wallclock_ms";
inline constexpr const char* kSweepHeader = "axis_value,seed,final_l2,opt_certificate,ratio";

int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out);
int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
              const std::filesystem::path& out);
int cmd_probe(const ExperimentConfig& cfg, const std::string& which, bool report_only,
              const std::filesystem::path& out);

// Full command-line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace sn::cli
