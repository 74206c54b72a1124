#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <cstdlib>

#include "sharp_neuron/distribution.hpp"
#include "sharp_neuron/kernels.hpp"

using namespace sn;

namespace {

struct Setup {
    Matrix xs;
    Vector w;
    Vector target;
};

Setup make(std::size_t n, std::size_t d, std::uint64_t seed) {
    Setup s;
    s.xs = sample(make_laplace(d, seed), n);
    s.w.resize(d);
    for (std::size_t i = 0; i < d; ++i) s.w[i] = std::sin(1.0 + static_cast<double>(i));
    s.target.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.target[j] = std::cos(static_cast<double>(j));
    return s;
}

template <typename F>
Vector with_threads(int threads, F&& f) {
    omp_set_num_threads(threads);
    Vector v = f();
    omp_set_num_threads(1);
    return v;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial references") {
    for (std::size_t n : {1u, 7u, 255u, 256u, 257u, 5000u, 40'000u}) {
        CAPTURE(n);
        const auto s = make(n, 9, n);
        Vector p(n), q(n);
        kernels::project(s.xs, s.w, p);
        kernels::project_serial(s.xs, s.w, q);
        CHECK(p == q);

        for (const auto& a : {make_relu(), make_gelu()}) {
            Vector g(9), h(9);
            kernels::surrogate_gradient(s.xs, s.target, a, s.w, g);
            kernels::surrogate_gradient_serial(s.xs, s.target, a, s.w, h);
            for (std::size_t i = 0; i < 9; ++i) CHECK(g[i] == doctest::Approx(h[i]).epsilon(1e-12).scale(1.0));
        }
        Vector m(9), r(9);
        kernels::weighted_row_mean(s.xs, s.target, m);
        kernels::weighted_row_mean_serial(s.xs, s.target, r);
        for (std::size_t i = 0; i < 9; ++i) CHECK(m[i] == doctest::Approx(r[i]).epsilon(1e-12).scale(1.0));

        CHECK(kernels::sum(s.target) == doctest::Approx(kernels::sum_serial(s.target)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("single-row gradient is exact") {
    Matrix xs(1, 3);
    xs(0, 0) = 0.5;
    xs(0, 1) = -2.0;
    xs(0, 2) = 3.25;
    const Vector w{1.0, 0.25, 0.1}, y{0.7};
    Vector g(3);
    kernels::surrogate_gradient(xs, y, make_relu(), w, g);
    const double r = std::max(0.0, 0.5 * 1.0 + -2.0 * 0.25 + 3.25 * 0.1) - 0.7;
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == r * xs(0, i));
}

TEST_CASE("results are bit-identical across thread counts") {
    const auto s = make(100'000, 12, 3);
    const auto a = make_swish();
    auto grad = [&] {
        Vector g(12);
        kernels::surrogate_gradient(s.xs, s.target, a, s.w, g);
        return g;
    };
    auto mean = [&] {
        Vector g(12);
        kernels::weighted_row_mean(s.xs, s.target, g);
        return g;
    };
    auto total = [&] { return Vector{kernels::sum(s.target)}; };
    auto draw = [&] {
        const Matrix m = sample(make_heavy_tail(6, 8.0, 0.0, 5), 30'000);
        return Vector(m.data().begin(), m.data().end());
    };
    for (int t : {2, 3, 4, 8}) {
        CHECK(with_threads(1, grad) == with_threads(t, grad));
        CHECK(with_threads(1, mean) == with_threads(t, mean));
        CHECK(with_threads(1, total) == with_threads(t, total));
        CHECK(with_threads(1, draw) == with_threads(t, draw));
    }
}

TEST_CASE("pairwise sum is accurate") {
    Vector v(1'000'003);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    long double ref = 0.0L;
    for (std::size_t i = v.size(); i-- > 0;) ref += v[i];
    CHECK(std::abs(kernels::sum(v) - static_cast<double>(ref)) <= 1e-13 * static_cast<double>(ref));
    CHECK(kernels::sum(Vector{}) == 0.0);
}

TEST_CASE("mean and standard error") {
    const Vector v{1.0, 2.0, 3.0, 4.0};
    const auto e = kernels::mean_and_stderr(v);
    CHECK(e.mean == 2.5);
    // sample variance 5/3, divided by n = 4
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK(kernels::mean_and_stderr(Vector{3.0}).std_error == 0.0);
}

TEST_CASE("thread budget honours SHARP_NEURON_THREADS") {
    setenv("SHARP_NEURON_THREADS", "1", 1);
    CHECK(kernels::thread_budget() == 1);
    setenv("SHARP_NEURON_THREADS", "1000000", 1);
    CHECK(kernels::thread_budget() == omp_get_num_procs());
    setenv("SHARP_NEURON_THREADS", "garbage", 1);
    CHECK(kernels::thread_budget() == omp_get_num_procs());
    unsetenv("SHARP_NEURON_THREADS");
    CHECK(kernels::thread_budget() >= 1);
}
