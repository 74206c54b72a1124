#include "sharp_neuron/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/surrogate.hpp"

namespace sn {

namespace {

Vector random_unit(Engine& eng, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u(d);
    double n2 = 0.0;
    while (n2 == 0.0) {
        for (double& v : u) v = normal(eng);
        n2 = norm_sq(u);
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : u) v *= inv;
    return u;
}

Vector offset(std::span<const double> base, std::span<const double> dir, double scale) {
    Vector w(base.begin(), base.end());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * dir[i];
    return w;
}

// ps holds w*.x_j for the rows of xs.
kernels::MeanEstimate ratio_with_projection(const Matrix& xs, std::span<const double> ps, std::span<const double> y,
                                            const Activation& a, std::span<const double> wstar,
                                            std::span<const double> w) {
    const double dn2 = dist_sq(w, wstar);
    if (!(dn2 > 0.0)) throw DomainError("sharpness ratio is undefined at w = w*");
    std::vector<double> terms(xs.rows());
    kernels::project(xs, w, terms);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const double pw = terms[j];
        terms[j] = (detail::eval_raw(a, pw) - y[j]) * (pw - ps[j]) / dn2;
    }
    return kernels::mean_and_stderr(terms);
}

void require_probe_sizes(std::span<const double> wstar, std::size_t n_probes, std::size_t n_mc) {
    if (!(norm(wstar) > 0.0)) throw DomainError("sharpness probes need w* != 0");
    if (n_probes < 100) throw PreconditionError("sharpness probes need n_probes >= 100");
    if (n_mc < 100'000) throw PreconditionError("sharpness probes need n_mc >= 1e5");
}

}  // namespace

std::vector<Vector> sharpness_probe_points(std::span<const double> wstar, std::size_t n_probes, std::uint64_t seed,
                                           double exclude_radius) {
    const std::size_t d = wstar.size();
    const double wn = norm(wstar);
    if (!(wn > 0.0)) throw DomainError("probe points need w* != 0");
    const double R = 2.0 * wn;
    const double r_min = std::max(1e-3, exclude_radius);
    if (r_min >= 3.0 * wn) throw PreconditionError("exclusion ball covers the probe region");
    const Vector zero(d, 0.0);
    constexpr std::array<double, 3> shells{0.01, 0.1, 0.5};
    constexpr int kMaxTries = 100'000;

    Engine eng = make_engine(seed, Stream::probes, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto accept = [&](const Vector& w) { return norm(w) <= R * (1.0 + 1e-12) && dist_sq(w, wstar) > r_min * r_min; };
    auto uniform_ball = [&]() {
        for (int k = 0; k < kMaxTries; ++k) {
            const Vector u = random_unit(eng, d);
            Vector w = offset(zero, u, R * std::pow(unif(eng), 1.0 / static_cast<double>(d)));
            if (accept(w)) return w;
        }
        throw NumericError("could not draw a probe point outside the exclusion ball");
    };

    std::vector<Vector> probes;
    probes.reserve(n_probes);
    for (std::size_t i = 0; i < n_probes; ++i) {
        const std::size_t kind = i % 4;
        Vector w;
        if (kind < 2) {
            w = uniform_ball();
        } else if (kind == 2) {
            for (int k = 0; k < kMaxTries && w.empty(); ++k) {
                Vector cand = offset(zero, random_unit(eng, d), R);
                if (accept(cand)) w = std::move(cand);
            }
            if (w.empty()) w = uniform_ball();
        } else {
            const double radius = std::max(shells[(i / 4) % shells.size()] * wn, 1.01 * r_min);
            for (int k = 0; k < kMaxTries && w.empty(); ++k) {
                Vector cand = offset(wstar, random_unit(eng, d), radius);
                if (accept(cand)) w = std::move(cand);
            }
            if (w.empty()) w = uniform_ball();
        }
        probes.push_back(std::move(w));
    }
    return probes;
}

kernels::MeanEstimate sharpness_ratio(const Matrix& xs, std::span<const double> y, const Activation& a,
                                      std::span<const double> wstar, std::span<const double> w) {
    std::vector<double> ps(xs.rows());
    kernels::project(xs, wstar, ps);
    return ratio_with_projection(xs, ps, y, a, wstar, w);
}

SharpnessReport sharpness_over(const Matrix& xs, std::span<const double> y, const Activation& a,
                               std::span<const double> wstar, const std::vector<Vector>& probes) {
    if (probes.empty()) throw PreconditionError("empty probe set");
    std::vector<double> ps(xs.rows());
    kernels::project(xs, wstar, ps);
    SharpnessReport rep;
    rep.probes = probes.size();
    rep.n_mc = xs.rows();
    rep.mu_bar_hat = std::numeric_limits<double>::infinity();
    for (const Vector& w : probes) {
        const auto est = ratio_with_projection(xs, ps, y, a, wstar, w);
        rep.max_std_error = std::max(rep.max_std_error, est.std_error);
        if (est.mean < rep.mu_bar_hat) {
            rep.mu_bar_hat = est.mean;
            rep.min_ratio_std_error = est.std_error;
            rep.min_ratio_point = w;
        }
    }
    rep.pass = rep.mu_bar_hat > 3.0 * rep.max_std_error;
    return rep;
}

SharpnessReport probe_noise_free_sharpness(const DistributionSpec& spec, const Activation& a,
                                           std::span<const double> wstar, std::size_t n_probes, std::size_t n_mc) {
    require_probe_sizes(wstar, n_probes, n_mc);
    const Matrix xs = sample(spec, n_mc, Stream::probes, 0);
    std::vector<double> y(n_mc);
    kernels::project(xs, wstar, y);
    for (double& v : y) v = detail::eval_raw(a, v);
    return sharpness_over(xs, y, a, wstar, sharpness_probe_points(wstar, n_probes, spec.seed));
}

SharpnessReport probe_noisy_sharpness(const DistributionSpec& spec, const PlantedInstance& instance,
                                      const SharpnessReport& noise_free, std::size_t n_probes, std::size_t n_mc) {
    require_probe_sizes(instance.wstar, n_probes, n_mc);
    SharpnessReport rep;
    rep.n_mc = n_mc;
    const double mu = noise_free.mu_bar_hat;
    const double wn = norm(instance.wstar);
    if (!(mu > 0.0)) {
        rep.degenerate = true;
        rep.excluded_ball_radius = std::numeric_limits<double>::infinity();
        return rep;
    }
    rep.excluded_ball_radius =
        std::sqrt(20.0 * spec.tail_B / (spec.tail_rho * mu * mu) * instance.opt_upper_bound);
    if (rep.excluded_ball_radius >= 3.0 * wn) {
        rep.degenerate = true;
        return rep;
    }
    const Batch b = generate(instance, spec, n_mc, Stream::probes, 0);
    const auto probes = sharpness_probe_points(instance.wstar, n_probes, spec.seed, rep.excluded_ball_radius);
    const double excl = rep.excluded_ball_radius;
    rep = sharpness_over(b.xs, b.y, instance.activation, instance.wstar, probes);
    rep.excluded_ball_radius = excl;
    rep.pass = rep.mu_bar_hat >= mu / 2.0 - 3.0 * rep.min_ratio_std_error;
    return rep;
}

LandscapeReport check_landscape(const DistributionSpec& spec, const PlantedInstance& instance,
                                std::span<const double> w_hat, double eps, double mu_bar, std::size_t n_eval) {
    if (!(mu_bar > 0.0)) throw DomainError("landscape check needs a positive sharpness constant");
    const Batch b = generate(instance, spec, n_eval, Stream::evaluation, 1);
    const double alpha = instance.activation.alpha;
    LandscapeReport rep;
    rep.l2_hat = l2_loss(w_hat, b, instance.activation);
    rep.opt_certificate = b.opt_certificate;
    rep.ratio = rep.l2_hat / (rep.opt_certificate + alpha * eps);
    const double s = alpha * spec.tail_B / (spec.tail_rho * mu_bar);
    rep.budget = s * s;
    rep.pass = rep.ratio <= rep.budget;
    return rep;
}

ConvergenceFit fit_convergence(std::span<const double> errors) {
    const std::size_t n = errors.size();
    if (n < 11) throw DomainError("fit_convergence needs at least 10 iterations");
    const std::size_t stride = std::max<std::size_t>(1, (n - 1) / 200);
    std::vector<double> sub;
    for (std::size_t i = 0; i < n; i += stride) sub.push_back(errors[i]);
    const std::size_t m = sub.size();

    std::size_t end = m - 1;
    for (std::size_t i = 0; i + 5 < m; ++i) {
        if (sub[i + 5] >= 0.9 * sub[i]) {
            end = i;
            break;
        }
    }
    const std::size_t last = std::max<std::size_t>(end, 1);

    double sx = 0.0, sy = 0.0;
    std::vector<double> ly(last + 1);
    for (std::size_t i = 0; i <= last; ++i) {
        ly[i] = std::log(std::max(sub[i], std::numeric_limits<double>::min()));
        sx += static_cast<double>(i);
        sy += ly[i];
    }
    const double k = static_cast<double>(last + 1);
    const double mx = sx / k, my = sy / k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i <= last; ++i) {
        const double dx = static_cast<double>(i) - mx, dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    ConvergenceFit fit;
    fit.rate = std::exp(slope / static_cast<double>(stride));
    const double ss_res = std::max(0.0, syy - slope * sxy);
    fit.r_squared = syy > 1e-300 ? 1.0 - ss_res / syy : 1.0;
    fit.segment_end = end * stride;
    if (end + 1 < m) {
        double s = 0.0;
        for (std::size_t i = end + 1; i < m; ++i) s += sub[i];
        fit.floor = s / static_cast<double>(m - end - 1);
    } else {
        fit.floor = sub.back();
    }
    return fit;
}

ConvergenceFit fit_convergence(const TrainTrace& trace) {
    std::vector<double> e(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) e[i] = trace[i].dist_sq;
    return fit_convergence(e);
}

TailReport check_tail_facts(const DistributionSpec& spec, std::size_t n) {
    TailReport rep;
    const double B = spec.tail_B;
    const double rho = spec.tail_rho;
    const bool gaussian = spec.family == Family::gaussian;
    const bool heavy = spec.family == Family::heavy_tail;

    auto add = [&](std::string what, const std::string& dir, double r, double value, double se, double bound) {
        TailCheck c{std::move(what), dir, r, value, se, bound, value <= bound + 3.0 * se};
        rep.pass = rep.pass && c.pass;
        rep.checks.push_back(std::move(c));
    };

    Vector e1(spec.dim, 0.0);
    e1[0] = 1.0;
    Engine eng = make_engine(spec.seed, Stream::moments, 1);
    const std::vector<std::pair<std::string, Vector>> dirs{{"e1", e1}, {"random", random_unit(eng, spec.dim)}};

    for (const auto& [dir, u] : dirs) {
        std::vector<double> proj;
        if (!gaussian) proj = projected_sample(spec, u, n);
        auto moment = [&](int order, double r) {
            if (gaussian) return MomentEstimate{order == 2 ? gaussian_H2(r) : gaussian_H4(r), 0.0, 0};
            return truncated_moment(proj, order, r);
        };

        const auto m2 = moment(2, 0.0);
        const auto m4 = moment(4, 0.0);
        add("H2(0) <= 5B/rho", dir, 0.0, m2.value, m2.std_error, 5.0 * B / rho);
        add("H4(0) <= 5B/rho", dir, 0.0, m4.value, m4.std_error, 5.0 * B / rho);

        for (double r : {1.0, 2.0, 4.0, 8.0}) {
            const double h = tail_h(spec, r);
            const auto ex = gaussian ? MomentEstimate{2.0 * (1.0 - detail::std_normal_cdf(r)), 0.0, 0}
                                     : exceedance(proj, r);
            const auto h2 = moment(2, r);
            const auto h4 = moment(4, r);
            add("Pr[|u.x|>=r] <= h(r)", dir, r, ex.value, ex.std_error, h);
            add("H2 <= envelope", dir, r, h2.value, h2.std_error, moment_envelope(spec, 2, r));
            add("H4 <= envelope", dir, r, h4.value, h4.std_error, moment_envelope(spec, 4, r));
            add("H2 <= (1+2B) r^2 h", dir, r, h2.value, h2.std_error, (1.0 + 2.0 * B) * r * r * h);
            if (heavy) {
                add("H4 <= (1+4B/rho) r^4 h", dir, r, h4.value, h4.std_error, (1.0 + 4.0 * B / rho) * std::pow(r, 4) * h);
            } else {
                add("H4 <= (1+64B^4) r^4 h", dir, r, h4.value, h4.std_error,
                    (1.0 + 64.0 * std::pow(B, 4)) * std::pow(r, 4) * h);
            }
            // Pointwise x^4 >= r^2 x^2 on the event, so this holds on every sample.
            add("r^2 H2 <= H4", dir, r, r * r * h2.value, 0.0, h4.value);
            if (spec.family == Family::discrete_gaussian && dir == "e1") {
                add("Pr[|X|>=r] <= 4exp(-r^2/8)", dir, r, ex.value, ex.std_error, 4.0 * std::exp(-r * r / 8.0));
            }
        }
        if (spec.family == Family::discrete_gaussian && dir == "e1") {
            // Lower bound: flip signs so the generic "value <= bound" form applies.
            add("E[X^4] >= 1.25", dir, 0.0, -m4.value, m4.std_error, -1.25);
        }
    }
    return rep;
}

GradcheckReport gradcheck(const DistributionSpec& spec, const Activation& a, std::size_t n_probes,
                          std::size_t batch_n, double tol) {
    if (n_probes == 0 || batch_n == 0) throw PreconditionError("gradcheck needs probes and samples");
    const std::size_t d = spec.dim;
    GradcheckReport rep;
    rep.probes = n_probes;
    for (std::size_t p = 0; p < n_probes; ++p) {
        Engine eng = make_engine(spec.seed, Stream::fd_probes, p, 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 2.0);
        Batch b;
        b.xs = sample(spec, batch_n, Stream::fd_probes, p);
        b.y.resize(batch_n);
        for (double& y : b.y) y = normal(eng);
        Vector w = random_unit(eng, d);
        const double scale = unif(eng);
        for (double& v : w) v *= scale;

        const Vector g = surrogate_grad(w, b, a);
        const double h = 1e-5 * (1.0 + norm(w));
        double err2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            Vector wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double fd = (surrogate_loss(wp, b, a) - surrogate_loss(wm, b, a)) / (2.0 * h);
            err2 += (fd - g[i]) * (fd - g[i]);
        }
        rep.max_rel_error = std::max(rep.max_rel_error, std::sqrt(err2) / (1.0 + norm(g)));
    }
    rep.pass = rep.max_rel_error <= tol;
    return rep;
}

}  // namespace sn
