#include "sharp_neuron/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace sn::kernels {

namespace {

std::size_t chunk_count(std::size_t rows, std::size_t chunk) { return (rows + chunk - 1) / chunk; }

// In-place pairwise tree over `count` blocks of `width` doubles; result in block 0.
void pairwise_reduce(std::vector<double>& blocks, std::size_t count, std::size_t width) {
    for (std::size_t stride = 1; stride < count; stride *= 2) {
        for (std::size_t i = 0; i + stride < count; i += 2 * stride) {
            double* dst = blocks.data() + i * width;
            const double* src = blocks.data() + (i + stride) * width;
            for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
        }
    }
}

bool use_parallel(const Matrix& xs) { return xs.rows() * xs.cols() >= kParallelThreshold; }

}  // namespace

void project(const Matrix& xs, std::span<const double> w, std::span<double> out) {
    const auto n = static_cast<std::int64_t>(xs.rows());
#pragma omp parallel for schedule(static) if (use_parallel(xs))
    for (std::int64_t j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = dot(xs.row(static_cast<std::size_t>(j)), w);
}

void project_serial(const Matrix& xs, std::span<const double> w, std::span<double> out) {
    for (std::size_t j = 0; j < xs.rows(); ++j) out[j] = dot(xs.row(j), w);
}

void weighted_row_mean(const Matrix& xs, std::span<const double> coef, std::span<double> out) {
    const std::size_t d = xs.cols();
    const std::size_t chunks = chunk_count(xs.rows(), kChunkRows);
    std::vector<double> partial(std::max<std::size_t>(chunks, 1) * d, 0.0);
#pragma omp parallel for schedule(static) if (use_parallel(xs))
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        double* acc = partial.data() + static_cast<std::size_t>(c) * d;
        const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows;
        const std::size_t end = std::min(xs.rows(), begin + kChunkRows);
        for (std::size_t j = begin; j < end; ++j) {
            const auto x = xs.row(j);
            const double r = coef[j];
            for (std::size_t k = 0; k < d; ++k) acc[k] += r * x[k];
        }
    }
    pairwise_reduce(partial, chunks, d);
    const double n = static_cast<double>(xs.rows());
    for (std::size_t k = 0; k < d; ++k) out[k] = partial[k] / n;
}

void weighted_row_mean_serial(const Matrix& xs, std::span<const double> coef, std::span<double> out) {
    const std::size_t d = xs.cols();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < xs.rows(); ++j) {
        const auto x = xs.row(j);
        for (std::size_t k = 0; k < d; ++k) out[k] += coef[j] * x[k];
    }
    const double n = static_cast<double>(xs.rows());
    for (std::size_t k = 0; k < d; ++k) out[k] /= n;
}

void surrogate_gradient(const Matrix& xs, std::span<const double> target, const Activation& a,
                        std::span<const double> w, std::span<double> out) {
    const std::size_t d = xs.cols();
    const std::size_t chunks = chunk_count(xs.rows(), kChunkRows);
    std::vector<double> partial(std::max<std::size_t>(chunks, 1) * d, 0.0);
#pragma omp parallel for schedule(static) if (use_parallel(xs))
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        double* acc = partial.data() + static_cast<std::size_t>(c) * d;
        const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows;
        const std::size_t end = std::min(xs.rows(), begin + kChunkRows);
        for (std::size_t j = begin; j < end; ++j) {
            const auto x = xs.row(j);
            const double r = detail::eval_raw(a, dot(x, w)) - target[j];
            for (std::size_t k = 0; k < d; ++k) acc[k] += r * x[k];
        }
    }
    pairwise_reduce(partial, chunks, d);
    const double n = static_cast<double>(xs.rows());
    for (std::size_t k = 0; k < d; ++k) out[k] = partial[k] / n;
}

void surrogate_gradient_serial(const Matrix& xs, std::span<const double> target, const Activation& a,
                               std::span<const double> w, std::span<double> out) {
    const std::size_t d = xs.cols();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < xs.rows(); ++j) {
        const auto x = xs.row(j);
        const double r = detail::eval_raw(a, dot(x, w)) - target[j];
        for (std::size_t k = 0; k < d; ++k) out[k] += r * x[k];
    }
    const double n = static_cast<double>(xs.rows());
    for (std::size_t k = 0; k < d; ++k) out[k] /= n;
}

double sum(std::span<const double> v) {
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = chunk_count(v.size(), kChunk);
    if (chunks == 0) return 0.0;
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static) if (v.size() >= kParallelThreshold)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
        const std::size_t end = std::min(v.size(), begin + kChunk);
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += v[i];
        partial[static_cast<std::size_t>(c)] = s;
    }
    pairwise_reduce(partial, chunks, 1);
    return partial[0];
}

double sum_serial(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

MeanEstimate mean_and_stderr(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return {};
    const double mean = sum(v) / static_cast<double>(n);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = v[i] - mean;
        dev[i] = t * t;
    }
    const double var = n > 1 ? sum(dev) / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

int thread_budget() {
    int threads = omp_get_num_procs();
    if (const char* env = std::getenv("SHARP_NEURON_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) threads = std::min(threads, cap);
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return std::max(threads, 1);
}

void apply_thread_budget() { omp_set_num_threads(thread_budget()); }

}  // namespace sn::kernels
