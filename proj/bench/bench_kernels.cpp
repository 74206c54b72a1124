// Serial reference kernels against the chunked OpenMP versions.
// Run with SHARP_NEURON_THREADS=<k> to pin the worker count.

#include <benchmark/benchmark.h>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/kernels.hpp"

namespace {

struct Fixture {
    sn::Matrix xs;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<double> out;
};

Fixture make(std::size_t n, std::size_t d) {
    Fixture f;
    f.xs = sn::sample(sn::make_gaussian(d, 7), n);
    f.y.assign(n, 0.5);
    f.w.assign(d, 0.1);
    f.out.assign(std::max(n, d), 0.0);
    return f;
}

void BM_gradient_serial(benchmark::State& st) {
    auto f = make(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
    const auto a = sn::make_relu();
    for (auto _ : st) {
        sn::kernels::surrogate_gradient_serial(f.xs, f.y, a, f.w, std::span(f.out).first(f.w.size()));
        benchmark::DoNotOptimize(f.out.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_gradient_parallel(benchmark::State& st) {
    sn::kernels::apply_thread_budget();
    auto f = make(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
    const auto a = sn::make_relu();
    for (auto _ : st) {
        sn::kernels::surrogate_gradient(f.xs, f.y, a, f.w, std::span(f.out).first(f.w.size()));
        benchmark::DoNotOptimize(f.out.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_project_serial(benchmark::State& st) {
    auto f = make(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
    for (auto _ : st) {
        sn::kernels::project_serial(f.xs, f.w, std::span(f.out).first(f.xs.rows()));
        benchmark::DoNotOptimize(f.out.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_project_parallel(benchmark::State& st) {
    sn::kernels::apply_thread_budget();
    auto f = make(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
    for (auto _ : st) {
        sn::kernels::project(f.xs, f.w, std::span(f.out).first(f.xs.rows()));
        benchmark::DoNotOptimize(f.out.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_sample_serial(benchmark::State& st) {
    const auto spec = sn::make_laplace(static_cast<std::size_t>(st.range(1)), 3);
    for (auto _ : st) benchmark::DoNotOptimize(sn::sample_serial(spec, static_cast<std::size_t>(st.range(0))));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_sample_parallel(benchmark::State& st) {
    sn::kernels::apply_thread_budget();
    const auto spec = sn::make_laplace(static_cast<std::size_t>(st.range(1)), 3);
    for (auto _ : st) benchmark::DoNotOptimize(sn::sample(spec, static_cast<std::size_t>(st.range(0))));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void shapes(benchmark::internal::Benchmark* b) {
    for (int64_t n : {256, 16384, 200000}) b->Args({n, 20});
}

}  // namespace

BENCHMARK(BM_gradient_serial)->Apply(shapes);
BENCHMARK(BM_gradient_parallel)->Apply(shapes);
BENCHMARK(BM_project_serial)->Apply(shapes);
BENCHMARK(BM_project_parallel)->Apply(shapes);
BENCHMARK(BM_sample_serial)->Apply(shapes);
BENCHMARK(BM_sample_parallel)->Apply(shapes);

BENCHMARK_MAIN();
