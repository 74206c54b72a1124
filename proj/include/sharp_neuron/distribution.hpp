#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sharp_neuron/matrix.hpp"
#include "sharp_neuron/rng.hpp"

namespace sn {

enum class Family { gaussian, laplace, heavy_tail, discrete_gaussian, hypergrid };

// Product-form marginal D_x with its declared concentration envelope
// Pr[|u.x| >= r] <= h(r) <= B r^-(4+rho) for r >= 1.
struct DistributionSpec {
    Family family = Family::gaussian;
    std::size_t dim = 1;
    double tail_B = 1.0;
    double tail_rho = 1.0;
    std::uint64_t seed = 0;
    double heavy_k = 0.0;  // heavy_tail: coordinate density ~ (1+|t|)^-(k+1)
    double theta = 1.0;    // discrete_gaussian: support theta*Z
};

DistributionSpec make_gaussian(std::size_t dim, std::uint64_t seed = 0);
DistributionSpec make_laplace(std::size_t dim, std::uint64_t seed = 0);
// B <= 0 selects the calibrated default for k.
DistributionSpec make_heavy_tail(std::size_t dim, double k, double B = 0.0, std::uint64_t seed = 0);
DistributionSpec make_discrete_gaussian(std::size_t dim, double theta, std::uint64_t seed = 0);
DistributionSpec make_hypergrid(std::size_t dim, std::uint64_t seed = 0);

// "gaussian", "laplace", "heavy:<k>[:<B>]", "dgauss:<theta>", "hypergrid".
DistributionSpec parse_distribution(std::string_view id, std::size_t dim, std::uint64_t seed = 0);
std::string distribution_id(const DistributionSpec& spec);

// Default B for heavy_tail_k: covers the standardized coordinate tail (1 + sd r)^-k <= sd^-k r^-k,
// the Gaussian bulk of diffuse projections and the kurtosis bound H4(0) <= 5B/rho.
double heavy_tail_default_B(double k);

// n i.i.d. draws. Rows are produced in fixed 64-row chunks, each with its own
// sub-stream (spec.seed, stream, counter, chunk), so output is independent of thread count.
Matrix sample(const DistributionSpec& spec, std::size_t n, Stream stream = Stream::features, std::uint64_t counter = 0);
// Same chunk streams, single-threaded.
Matrix sample_serial(const DistributionSpec& spec, std::size_t n, Stream stream = Stream::features,
                     std::uint64_t counter = 0);

// Declared envelope min{1, h(r)}; r < 1 -> DomainError.
double tail_h(const DistributionSpec& spec, double r);

// r^i min{1,h(r)} + int_r^inf i s^(i-1) min{1,h(s)} ds, with the envelope taken as 1 below r = 1.
// Upper bound on H_i(r) for every unit direction (i = 2 or 4).
double moment_envelope(const DistributionSpec& spec, int order, double r);

// Per-coordinate E[x_i^2] and E[x_i^4] (exact for every family).
double coordinate_second_moment(const DistributionSpec& spec);
double coordinate_fourth_moment(const DistributionSpec& spec);

struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;  // 0 for analytic values
};

inline constexpr std::size_t kMomentSamples = 1'000'000;

// Projections u.x of n draws from the moment stream; shared across r so estimates at
// different r use common random numbers.
std::vector<double> projected_sample(const DistributionSpec& spec, std::span<const double> u,
                                     std::size_t n = kMomentSamples);

// E[(u.x)^order 1{|u.x| >= r}] over a projected sample.
MomentEstimate truncated_moment(std::span<const double> projections, int order, double r);
// Empirical Pr[|u.x| >= r] with binomial standard error.
MomentEstimate exceedance(std::span<const double> projections, double r);

// H2(r) = E[(u.x)^2 1{|u.x| >= r}] at direction u; analytic for gaussian, Monte-Carlo otherwise.
MomentEstimate H2(const DistributionSpec& spec, std::span<const double> u, double r, std::size_t n = kMomentSamples);
MomentEstimate H4(const DistributionSpec& spec, std::span<const double> u, double r, std::size_t n = kMomentSamples);

// Closed forms of the standard normal truncated moments (all directions agree).
double gaussian_H2(double r);
double gaussian_H4(double r);

// Smallest r (bisection, bracket width <= 1e-6) with H2(r) <= kappa, using the analytic H2 for
// gaussian and the worst-direction envelope otherwise. kappa >= H2(0) -> 0.
double H2_inverse(const DistributionSpec& spec, double kappa);
// Same for H4.
double H4_inverse(const DistributionSpec& spec, double kappa);

struct MarginCertificate {
    double gamma = 0.0;
    double lambda = 0.0;           // smallest eigenvalue of the restricted second-moment matrix
    Vector wstar_direction;        // unit vector
    Matrix second_moment;          // d x d, E[x x^T 1{w*.x >= gamma ||w*||}]
    double event_fraction = 0.0;   // share of samples inside the event
    bool degenerate = false;       // no sample passed the margin
};

MarginCertificate estimate_margin(const DistributionSpec& spec, std::span<const double> wstar, double gamma,
                                  std::size_t n);

}  // namespace sn
