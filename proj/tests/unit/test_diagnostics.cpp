#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sharp_neuron/diagnostics.hpp"
#include "sharp_neuron/errors.hpp"

using namespace sn;

namespace {

const TailCheck& find_check(const TailReport& rep, const std::string& what, const std::string& dir, double r) {
    for (const auto& c : rep.checks) {
        if (c.what == what && c.direction == dir && c.r == r) return c;
    }
    FAIL("missing tail check " << what);
    return rep.checks.front();
}

Vector clean_labels(const Matrix& xs, std::span<const double> wstar, const Activation& a) {
    Vector y(xs.rows());
    kernels::project(xs, wstar, y);
    for (double& v : y) v = detail::eval_raw(a, v);
    return y;
}

}  // namespace

TEST_CASE("fit_convergence on a geometric sequence") {
    std::vector<double> e(51);
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = std::pow(0.9, static_cast<double>(t));
    const auto fit = fit_convergence(e);
    CHECK(fit.rate == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_convergence on a constant sequence") {
    const std::vector<double> e(30, 0.25);
    const auto fit = fit_convergence(e);
    CHECK(fit.rate == 1.0);
    CHECK(fit.floor == 0.25);
}

TEST_CASE("fit_convergence stops at the floor") {
    std::vector<double> e(200);
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = std::max(std::pow(0.8, static_cast<double>(t)), 1e-6);
    const auto fit = fit_convergence(e);
    CHECK(fit.rate == doctest::Approx(0.8).epsilon(1e-3));
    CHECK(fit.r_squared >= 0.99);
    CHECK(fit.floor == doctest::Approx(1e-6).epsilon(1e-9));
    CHECK(fit.segment_end < 80);
}

TEST_CASE("fit_convergence needs ten iterations") {
    CHECK_THROWS_AS(fit_convergence(std::vector<double>(10, 1.0)), DomainError);
    CHECK_NOTHROW(fit_convergence(std::vector<double>(11, 1.0)));
    TrainTrace t(5);
    CHECK_THROWS_AS(fit_convergence(t), DomainError);
}

TEST_CASE("collinear probe matches the closed form") {
    const double half = oracle::integrate([](double z) { return z * z * oracle::phi(z); }, 0.0, 12.0, 24);
    for (std::size_t d : {1u, 5u, 20u}) {
        CAPTURE(d);
        const auto spec = make_gaussian(d, 3);
        const Vector ws = planted_direction(d, 1.0, 3);
        const Matrix xs = sample(spec, 200'000, Stream::probes, 0);
        const Vector y = clean_labels(xs, ws, make_relu());
        Vector w2(ws);
        for (double& v : w2) v *= 2.0;
        const auto est = sharpness_ratio(xs, y, make_relu(), ws, w2);
        CHECK(std::abs(est.mean - half) <= 3.0 * est.std_error);

        Vector near(ws);
        for (double& v : near) v *= 1.0 + 1e-3;
        CHECK(sharpness_ratio(xs, y, make_relu(), ws, near).mean >= 0.0);
        CHECK_THROWS_AS(sharpness_ratio(xs, y, make_relu(), ws, ws), DomainError);
    }
}

TEST_CASE("probe points respect the declared layout") {
    const Vector ws = planted_direction(6, 1.5, 4);
    const auto probes = sharpness_probe_points(ws, 400, 4);
    REQUIRE(probes.size() == 400);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double r = norm(probes[i]);
        CHECK(r <= 3.0 * (1.0 + 1e-12));
        CHECK(dist_sq(probes[i], ws) > 1e-6);
        if (i % 4 == 2) CHECK(r == doctest::Approx(3.0).epsilon(1e-12));
    }
    CHECK(probes == sharpness_probe_points(ws, 400, 4));
    CHECK_FALSE(probes == sharpness_probe_points(ws, 400, 5));

    for (const auto& w : sharpness_probe_points(ws, 200, 4, 0.4)) CHECK(std::sqrt(dist_sq(w, ws)) > 0.4);
    CHECK_THROWS_AS(sharpness_probe_points(Vector(6, 0.0), 100, 1), DomainError);
}

TEST_CASE("noise-free sharpness for gaussian ReLU") {
    const auto spec = make_gaussian(5, 7);
    const Vector ws = planted_direction(5, 1.0, 7);
    const auto rep = probe_noise_free_sharpness(spec, make_relu(), ws, 200, 100'000);
    CHECK(rep.pass);
    CHECK(rep.mu_bar_hat > 0.0);
    CHECK(rep.probes == 200);
    CHECK(rep.n_mc == 100'000);
    CHECK(rep.min_ratio_point.size() == 5);

    const auto again = probe_noise_free_sharpness(spec, make_relu(), ws, 200, 100'000);
    CHECK(again.mu_bar_hat == rep.mu_bar_hat);
    CHECK(again.min_ratio_point == rep.min_ratio_point);

    CHECK_THROWS_AS(probe_noise_free_sharpness(spec, make_relu(), Vector(5, 0.0), 200, 100'000), DomainError);
    CHECK_THROWS_AS(probe_noise_free_sharpness(spec, make_relu(), ws, 99, 100'000), PreconditionError);
    CHECK_THROWS_AS(probe_noise_free_sharpness(spec, make_relu(), ws, 200, 99'999), PreconditionError);
}

TEST_CASE("the probe set determines the report") {
    const auto spec = make_gaussian(4, 8);
    const Vector ws = planted_direction(4, 1.0, 8);
    const Matrix xs = sample(spec, 50'000, Stream::probes, 0);
    const Vector y = clean_labels(xs, ws, make_relu());
    const auto probes = sharpness_probe_points(ws, 100, 8);
    std::vector<Vector> shifted;
    for (const auto& w : probes) {
        Vector v(ws);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i] - ws[i];
        shifted.push_back(v);
    }
    const auto a = sharpness_over(xs, y, make_relu(), ws, probes);
    const auto b = sharpness_over(xs, y, make_relu(), ws, shifted);
    CHECK(a.mu_bar_hat == doctest::Approx(b.mu_bar_hat).epsilon(1e-10));
}

TEST_CASE("noisy sharpness collapses to the noise-free probe without noise") {
    const auto spec = make_gaussian(5, 9);
    const auto inst = make_instance(spec, planted_direction(5, 1.0, 9), 2.0, make_relu(), parse_noise("none"));
    const auto nf = probe_noise_free_sharpness(spec, make_relu(), inst.wstar, 200, 100'000);
    const auto noisy = probe_noisy_sharpness(spec, inst, nf, 200, 100'000);
    CHECK(noisy.excluded_ball_radius == 0.0);
    CHECK_FALSE(noisy.degenerate);
    CHECK(noisy.mu_bar_hat == nf.mu_bar_hat);
    CHECK(noisy.pass);
}

TEST_CASE("noisy sharpness with moderate and overwhelming noise") {
    const auto spec = make_gaussian(5, 10);
    const Vector ws = planted_direction(5, 1.0, 10);
    const auto nf = probe_noise_free_sharpness(spec, make_relu(), ws, 200, 100'000);

    const auto mild = make_instance(spec, ws, 2.0, make_relu(), parse_noise("add:0.1", 10));
    const auto rep = probe_noisy_sharpness(spec, mild, nf, 200, 100'000);
    CHECK_FALSE(rep.degenerate);
    CHECK(rep.excluded_ball_radius > 0.0);
    CHECK(rep.pass);

    const auto loud = make_instance(spec, ws, 2.0, make_relu(), parse_noise("add:5", 10));
    const auto deg = probe_noisy_sharpness(spec, loud, nf, 200, 100'000);
    CHECK(deg.degenerate);
    CHECK_FALSE(deg.pass);
    CHECK(deg.excluded_ball_radius >= 3.0);
}

TEST_CASE("landscape check") {
    const auto spec = make_gaussian(6, 11);
    const auto inst = make_instance(spec, planted_direction(6, 1.0, 11), 2.0, make_relu(), parse_noise("add:0.1", 11));
    const auto at_opt = check_landscape(spec, inst, inst.wstar, 1e-2, 0.5, 20'000);
    CHECK(at_opt.ratio <= 1.0);
    CHECK(at_opt.l2_hat == doctest::Approx(at_opt.opt_certificate).epsilon(1e-12));
    CHECK(at_opt.budget == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(at_opt.pass);

    const auto clean = make_instance(spec, inst.wstar, 2.0, make_relu(), parse_noise("none"));
    CHECK(check_landscape(spec, clean, clean.wstar, 1e-6, 0.5, 20'000).l2_hat == 0.0);

    auto cfg = derive_params(spec, make_relu(), 2.0, 1e-2, 0.1, 0.05);
    cfg.T = 4000;
    const auto res = train(cfg, spec, inst, Mode::monotone, {0, false});
    const auto rep = check_landscape(spec, inst, res.w, 1e-2, 0.05, 100'000);
    CHECK(rep.ratio <= 100.0);

    CHECK_THROWS_AS(check_landscape(spec, inst, inst.wstar, 1e-2, 0.0), DomainError);
}

TEST_CASE("tail facts") {
    const auto lap = check_tail_facts(make_laplace(5, 1));
    CHECK(lap.pass);
    for (const auto& c : lap.checks) {
        if (c.r == 4.0) CHECK(c.pass);
    }

    const auto g = check_tail_facts(make_gaussian(5, 1));
    CHECK(g.pass);
    CHECK(find_check(g, "H2(0) <= 5B/rho", "e1", 0.0).value == doctest::Approx(1.0).epsilon(1e-9));

    const auto h = check_tail_facts(make_hypergrid(5, 1));
    CHECK(h.pass);
    const auto& h4 = find_check(h, "H4(0) <= 5B/rho", "e1", 0.0);
    CHECK(std::abs(h4.value - 2.0 / 3.0) <= 3.0 * h4.std_error);
    CHECK(h4.value <= 5.0);
    const auto grid = make_hypergrid(5, 1);
    CHECK(h4.bound == 5.0 * grid.tail_B / grid.tail_rho);

    const auto dg = check_tail_facts(make_discrete_gaussian(5, 1.0, 1));
    CHECK(dg.pass);
    CHECK(find_check(dg, "E[X^4] >= 1.25", "e1", 0.0).pass);
}

TEST_CASE("gradcheck passes for every activation") {
    for (const auto& a : {make_relu(), make_leaky_relu(0.1), make_gelu(), make_swish()}) {
        CAPTURE(a.name);
        const auto rep = gradcheck(make_gaussian(6, 2), a, 100);
        CHECK(rep.pass);
        CHECK(rep.probes == 100);
        CHECK(rep.max_rel_error < 1e-4);
    }
}
