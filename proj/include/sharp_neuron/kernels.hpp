#pragma once

// Data-parallel kernels behind the surrogate, moment and probe computations.
//
// Each parallel kernel works on fixed-size row chunks and reduces the per-chunk
// partials pairwise in chunk order, so the result is bit-identical for any
// thread count. The *_serial variants are plain left-to-right loops kept as the
// reference the parallel versions are tested against.

#include <cstddef>
#include <span>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/matrix.hpp"

namespace sn::kernels {

inline constexpr std::size_t kChunkRows = 256;
// Below this many matrix entries the kernels stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

// out[j] = w . x_j
void project(const Matrix& xs, std::span<const double> w, std::span<double> out);
void project_serial(const Matrix& xs, std::span<const double> w, std::span<double> out);

// out = (1/N) sum_j coef[j] x_j
void weighted_row_mean(const Matrix& xs, std::span<const double> coef, std::span<double> out);
void weighted_row_mean_serial(const Matrix& xs, std::span<const double> coef, std::span<double> out);

// Residuals sigma(w.x_j) - target[j] and the mean of residual_j * x_j in one pass.
void surrogate_gradient(const Matrix& xs, std::span<const double> target, const Activation& a,
                        std::span<const double> w, std::span<double> out);
void surrogate_gradient_serial(const Matrix& xs, std::span<const double> target, const Activation& a,
                               std::span<const double> w, std::span<double> out);

// Fixed-order pairwise sum.
double sum(std::span<const double> v);
double sum_serial(std::span<const double> v);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Sample mean and standard error of the mean.
MeanEstimate mean_and_stderr(std::span<const double> v);

// Number of threads to use: SHARP_NEURON_THREADS caps omp_get_max_threads().
int thread_budget();
// Applies thread_budget() to the OpenMP runtime.
void apply_thread_budget();

}  // namespace sn::kernels
