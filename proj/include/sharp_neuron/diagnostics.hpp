#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/dataset.hpp"
#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/kernels.hpp"
#include "sharp_neuron/learner.hpp"
#include "sharp_neuron/matrix.hpp"

namespace sn {

struct SharpnessReport {
    double mu_bar_hat = 0.0;         // min over probes of grad(w).(w - w*) / ||w - w*||^2
    std::size_t probes = 0;
    Vector min_ratio_point;
    double min_ratio_std_error = 0.0;
    double max_std_error = 0.0;      // largest per-probe standard error
    double excluded_ball_radius = 0.0;
    std::size_t n_mc = 0;
    bool degenerate = false;         // exclusion ball swallows B(2||w*||)
    bool pass = false;
};

// Probe set in B(2||w*||): 50% uniform in the ball, 25% on its boundary, 25% on shells of
// radius {0.01, 0.1, 0.5}||w*|| around w*. Points within max(1e-3, exclude_radius) of w* are redrawn.
std::vector<Vector> sharpness_probe_points(std::span<const double> wstar, std::size_t n_probes, std::uint64_t seed,
                                           double exclude_radius = 0.0);

// grad(w).(w - w*) / ||w - w*||^2 estimated on xs with labels y (mean and standard error).
kernels::MeanEstimate sharpness_ratio(const Matrix& xs, std::span<const double> y, const Activation& a,
                                      std::span<const double> wstar, std::span<const double> w);

// Reduction over an explicit probe set (labels y; pass sigma(w*.x) for the noise-free surrogate).
SharpnessReport sharpness_over(const Matrix& xs, std::span<const double> y, const Activation& a,
                               std::span<const double> wstar, const std::vector<Vector>& probes);

SharpnessReport probe_noise_free_sharpness(const DistributionSpec& spec, const Activation& a,
                                           std::span<const double> wstar, std::size_t n_probes, std::size_t n_mc);

// Noisy labels, probes restricted to ||w - w*||^2 > 20B/(rho mu^2) * opt, mu from the noise-free report.
SharpnessReport probe_noisy_sharpness(const DistributionSpec& spec, const PlantedInstance& instance,
                                      const SharpnessReport& noise_free, std::size_t n_probes, std::size_t n_mc);

struct LandscapeReport {
    double l2_hat = 0.0;
    double opt_certificate = 0.0;
    double ratio = 0.0;   // l2_hat / (opt_certificate + alpha eps)
    double budget = 0.0;  // (alpha B / (rho mu_bar))^2
    bool pass = false;
};

LandscapeReport check_landscape(const DistributionSpec& spec, const PlantedInstance& instance,
                                std::span<const double> w_hat, double eps, double mu_bar, std::size_t n_eval = 100'000);

struct ConvergenceFit {
    double rate = 1.0;  // per-iteration contraction of ||w_t - w*||^2
    double r_squared = 1.0;
    double floor = 0.0;
    std::size_t segment_end = 0;  // last iteration inside the fitted segment
};

ConvergenceFit fit_convergence(const TrainTrace& trace);
// Same fit on a bare sequence e_0, e_1, ...
ConvergenceFit fit_convergence(std::span<const double> errors);

struct TailCheck {
    std::string what;
    std::string direction;
    double r = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct TailReport {
    std::vector<TailCheck> checks;
    bool pass = true;
};

// H2/H4/exceedance against the declared envelopes on r in {1, 2, 4, 8} along e_1 and a random
// direction, plus H2(0), H4(0) <= 5B/rho. Every comparison allows 3 standard errors.
TailReport check_tail_facts(const DistributionSpec& spec, std::size_t n = kMomentSamples);

struct GradcheckReport {
    double max_rel_error = 0.0;  // max ||FD - grad|| / (1 + ||grad||)
    std::size_t probes = 0;
    bool pass = false;
};

// Central differences of surrogate_loss (step 1e-5 (1 + ||w||)) against surrogate_grad on random
// (w, batch) pairs.
GradcheckReport gradcheck(const DistributionSpec& spec, const Activation& a, std::size_t n_probes = 100,
                          std::size_t batch_n = 64, double tol = 1e-4);

}  // namespace sn
