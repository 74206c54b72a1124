#include "sharp_neuron/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/kernels.hpp"
#include "sharp_neuron/surrogate.hpp"

namespace sn {

double derive_r_eps(const DistributionSpec& spec, double eps, double c_H) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    double r = 1.0;
    switch (spec.family) {
        case Family::laplace: r = spec.tail_B * std::log(1.0 / (eps * eps)); break;
        case Family::heavy_tail: r = std::pow(spec.tail_B / eps, 1.0 / (spec.heavy_k - 4.0)); break;
        case Family::gaussian:
        case Family::discrete_gaussian:
        case Family::hypergrid: r = H4_inverse(spec, c_H * eps); break;
    }
    return std::max(1.0, r);
}

LearnerConfig derive_params(const DistributionSpec& spec, const Activation& a, double W, double eps, double delta,
                            double mu, const DeriveOptions& opts) {
    if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("mu must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(W > 0.0)) throw ConfigError("W must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(opts.c_N > 0.0 && opts.c_H > 0.0)) throw ConfigError("c_N and c_H must be positive");

    LearnerConfig c;
    c.W = W;
    c.eps = eps;
    c.delta = delta;
    c.mu = mu;
    c.derive = true;

    const double alpha = a.alpha;
    const double B = spec.tail_B;
    const double rho = spec.tail_rho;

    c.M = alpha * W * H2_inverse(spec, eps / (4.0 * alpha * alpha * W * W));
    c.degenerate = !(c.M > 0.0);
    c.r_eps = derive_r_eps(spec, eps, opts.c_H);
    c.eta = mu * rho * rho / (32.0 * alpha * alpha * B * B);

    c.T_theory = std::ceil(256.0 * alpha * alpha * B * B / (mu * mu * rho * rho) * std::log(256.0 * W * W / eps));
    c.T_theory = std::max(1.0, c.T_theory);
    c.T = static_cast<std::size_t>(std::min(c.T_theory, static_cast<double>(opts.T_max)));

    const double d = static_cast<double>(spec.dim);
    c.N_theory = std::ceil(opts.c_N * d * c.T_theory / delta * (c.r_eps * c.r_eps + alpha * alpha * c.M * c.M));
    const double floor_n = std::max(d, 64.0);
    const double capped = std::min(c.N_theory, static_cast<double>(opts.N_max));
    c.N = static_cast<std::size_t>(std::max(floor_n, capped));
    return c;
}

bool stop_check(const TrainTrace& trace, const LearnerConfig& config) {
    if (trace.size() < 2) return false;
    return trace.back().grad_norm < config.stop_threshold;
}

namespace {

enum class Objective { surrogate, squared };

TrainResult run_loop(const LearnerConfig& config, const DistributionSpec& spec, const PlantedInstance& instance,
                     Mode mode, Objective objective, const TrainOptions& opts) {
    const std::size_t d = spec.dim;
    if (instance.wstar.size() != d) throw PreconditionError("w* dimension does not match the distribution");
    if (config.N == 0) throw ConfigError("batch size N must be >= 1");
    if (!(config.eta >= 0.0) || !std::isfinite(config.eta)) throw ConfigError("eta must be finite and >= 0");
    if (!(config.M > 0.0)) {
        throw ConfigError("truncation level M is 0: eps is at or above the trivial loss level (degenerate)");
    }
    if (mode == Mode::nonmonotone && instance.activation.monotone) {
        throw PreconditionError("nonmonotone mode needs a non-monotone activation");
    }
    if (mode == Mode::monotone && !instance.activation.monotone) {
        throw PreconditionError("non-monotone activation needs nonmonotone mode");
    }

    const Activation step_act = mode == Mode::nonmonotone ? truncate_positive(instance.activation)
                                                          : instance.activation;
    const Batch holdout = opts.holdout_n > 0 ? generate(instance, spec, opts.holdout_n, Stream::holdout, 0) : Batch{};
    const auto t0 = std::chrono::steady_clock::now();

    TrainResult res;
    res.w.assign(d, 0.0);
    res.trace.reserve(config.T + 1);

    auto record = [&](std::size_t iter, double gnorm) {
        TraceRecord r;
        r.iter = iter;
        r.dist_sq = dist_sq(res.w, instance.wstar);
        r.grad_norm = gnorm;
        r.l2_holdout = opts.holdout_n > 0 ? l2_loss(res.w, holdout, instance.activation) : 0.0;
        if (opts.wallclock) {
            r.wallclock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
        res.trace.push_back(r);
    };
    record(0, 0.0);

    for (std::size_t t = 0; t < config.T; ++t) {
        Batch b = truncate_labels(generate(instance, spec, config.N, Stream::features, t), config.M);
        if (mode == Mode::nonmonotone) b = truncate_nonmonotone(std::move(b), config.M);
        const Vector g = objective == Objective::surrogate ? surrogate_grad(res.w, b, step_act)
                                                           : l2_grad(res.w, b, step_act);
        const double gnorm = norm(g);
        if (!std::isfinite(gnorm)) {
            throw NumericError("non-finite gradient at iteration " + std::to_string(t) + " (batch seed " +
                               std::to_string(substream_seed(spec.seed, Stream::features, t)) + ")");
        }
        for (std::size_t i = 0; i < d; ++i) res.w[i] -= config.eta * g[i];
        if (config.project == Projection::ball_W) {
            const double n = norm(res.w);
            if (n > config.W) {
                for (double& v : res.w) v *= config.W / n;
            }
        }
        record(t + 1, gnorm);
        if (stop_check(res.trace, config)) break;
    }
    return res;
}

}  // namespace

TrainResult train(const LearnerConfig& config, const DistributionSpec& spec, const PlantedInstance& instance,
                  Mode mode, const TrainOptions& opts) {
    return run_loop(config, spec, instance, mode, Objective::surrogate, opts);
}

TrainResult baseline_l2_gd(const LearnerConfig& config, const DistributionSpec& spec,
                           const PlantedInstance& instance, const TrainOptions& opts) {
    const Mode mode = instance.activation.monotone ? Mode::monotone : Mode::nonmonotone;
    return run_loop(config, spec, instance, mode, Objective::squared, opts);
}

}  // namespace sn
