#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/dataset.hpp"
#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/matrix.hpp"

namespace sn {

enum class Projection { none, ball_W };
enum class Mode { monotone, nonmonotone };

struct LearnerConfig {
    double W = 1.0;
    double eps = 1e-2;
    double delta = 0.1;
    std::size_t T = 0;
    std::size_t N = 0;
    double eta = 0.0;
    double M = 0.0;
    double r_eps = 1.0;
    bool derive = true;
    Projection project = Projection::none;
    double mu = 0.05;
    // Values the formulas give before the practical caps are applied.
    double T_theory = 0.0;
    double N_theory = 0.0;
    bool degenerate = false;      // M came out as 0 (eps above the trivial level)
    double stop_threshold = 0.0;  // early exit once the gradient norm drops below; 0 disables
};

struct DeriveOptions {
    double c_N = 1.0;
    double c_H = 1.0;
    std::size_t T_max = 10'000;
    std::size_t N_max = 256;
};

// M, r_eps, eta, T, N from the distribution and activation constants.
LearnerConfig derive_params(const DistributionSpec& spec, const Activation& a, double W, double eps, double delta,
                            double mu, const DeriveOptions& opts = {});

// r_eps for the family: B log(1/eps^2) (laplace), (B/eps)^(1/(k-4)) (heavy tail), otherwise the
// smallest r with H4(r) <= c_H eps. Never below 1.
double derive_r_eps(const DistributionSpec& spec, double eps, double c_H = 1.0);

struct TraceRecord {
    std::size_t iter = 0;
    double dist_sq = 0.0;     // ||w_t - w*||^2
    double grad_norm = 0.0;   // norm of the gradient that produced w_t (0 for t = 0)
    double l2_holdout = 0.0;  // squared loss on the fixed holdout batch
    double wallclock_ms = 0.0;
};

using TrainTrace = std::vector<TraceRecord>;

struct TrainOptions {
    std::size_t holdout_n = 1000;
    bool wallclock = false;
};

struct TrainResult {
    Vector w;
    TrainTrace trace;
};

TrainResult train(const LearnerConfig& config, const DistributionSpec& spec, const PlantedInstance& instance,
                  Mode mode = Mode::monotone, const TrainOptions& opts = {});

// Last record's gradient norm below config.stop_threshold (traces with no iterations never stop).
bool stop_check(const TrainTrace& trace, const LearnerConfig& config);

// Same loop stepping on the squared-loss gradient.
TrainResult baseline_l2_gd(const LearnerConfig& config, const DistributionSpec& spec,
                           const PlantedInstance& instance, const TrainOptions& opts = {});

}  // namespace sn
