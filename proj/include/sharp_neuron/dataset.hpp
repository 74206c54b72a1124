#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/matrix.hpp"
#include "sharp_neuron/rng.hpp"

namespace sn {

enum class NoiseKind { none, additive_bounded, flip_fraction, oblivious_heavy };

// Seedable label-corruption recipe applied on top of sigma(w*.x).
//   additive_bounded: y += magnitude * (2U - 1), U ~ Uniform[0,1)
//   flip_fraction:    exactly floor(p n) labels per batch replaced by replacement_scale * N(0,1)
//   oblivious_heavy:  y += magnitude * (unit-variance symmetric Pareto noise with exponent tail_k)
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double magnitude = 0.0;
    double p = 0.0;
    double replacement_scale = 0.0;
    double tail_k = 0.0;
    std::uint64_t seed = 0;
};

// "none", "add:<m>", "flip:<p>:<s>", "heavy:<k>[:<scale>]"
NoiseModel parse_noise(std::string_view id, std::uint64_t seed = 0);
std::string noise_id(const NoiseModel& noise);

struct PlantedInstance {
    Vector wstar;
    double W = 1.0;
    Activation activation;
    NoiseModel noise;
    double opt_upper_bound = 0.0;  // E[(sigma(w*.x) - y)^2]; 0 exactly for noise=none
};

// Uniformly random direction scaled to `length`, drawn from the planted stream.
Vector planted_direction(std::size_t dim, double length, std::uint64_t seed);

// Builds an instance and certifies opt_upper_bound on `certify_n` fresh draws.
PlantedInstance make_instance(const DistributionSpec& spec, Vector wstar, double W, Activation activation,
                              NoiseModel noise, std::size_t certify_n = 100'000);

struct Batch {
    Matrix xs;
    Vector y;
    double opt_certificate = 0.0;  // mean (sigma(w*.x) - y)^2 over this batch at generation time
};

// n fresh draws: x from (spec.seed, stream, counter), noise from (noise.seed, ...).
Batch generate(const PlantedInstance& instance, const DistributionSpec& spec, std::size_t n,
               Stream stream = Stream::features, std::uint64_t counter = 0);

// y <- sgn(y) min(|y|, M)
Batch truncate_labels(Batch batch, double M);

// y <- min(max(y, 0), M)
Batch truncate_nonmonotone(Batch batch, double M = std::numeric_limits<double>::infinity());

// mean (sigma(w*.x_j) - y_j)^2
double label_certificate(const Batch& batch, const Activation& a, std::span<const double> wstar);

}  // namespace sn
