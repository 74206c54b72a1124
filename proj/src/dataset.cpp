#include "sharp_neuron/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/kernels.hpp"

namespace sn {

namespace {

constexpr std::size_t kNoiseChunk = 64;

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

double heavy_noise_draw(Engine& eng, double k) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::bernoulli_distribution sign(0.5);
    const double u = 1.0 - unif(eng);
    const double sd = std::sqrt(2.0 / ((k - 1.0) * (k - 2.0)));
    const double m = (std::pow(u, -1.0 / k) - 1.0) / sd;
    return sign(eng) ? m : -m;
}

void apply_noise(const NoiseModel& noise, Vector& y, Stream stream, std::uint64_t counter) {
    const std::size_t n = y.size();
    switch (noise.kind) {
        case NoiseKind::none: return;
        case NoiseKind::additive_bounded:
        case NoiseKind::oblivious_heavy: {
            const std::size_t chunks = (n + kNoiseChunk - 1) / kNoiseChunk;
            // Noise streams are keyed by the feature stream id so holdout/eval/train never share draws.
            const std::uint64_t key = (static_cast<std::uint64_t>(stream) << 40) ^ counter;
            for (std::size_t c = 0; c < chunks; ++c) {
                Engine eng = make_engine(noise.seed, Stream::noise, key, c);
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                const std::size_t end = std::min(n, (c + 1) * kNoiseChunk);
                for (std::size_t j = c * kNoiseChunk; j < end; ++j) {
                    if (noise.kind == NoiseKind::additive_bounded) {
                        y[j] += noise.magnitude * (2.0 * unif(eng) - 1.0);
                    } else {
                        y[j] += noise.magnitude * heavy_noise_draw(eng, noise.tail_k);
                    }
                }
            }
            return;
        }
        case NoiseKind::flip_fraction: {
            const std::uint64_t key = (static_cast<std::uint64_t>(stream) << 40) ^ counter;
            Engine eng = make_engine(noise.seed, Stream::flip_subset, key);
            const auto flips = static_cast<std::size_t>(std::floor(noise.p * static_cast<double>(n)));
            std::vector<std::size_t> idx(n);
            for (std::size_t j = 0; j < n; ++j) idx[j] = j;
            std::normal_distribution<double> normal(0.0, 1.0);
            // Partial Fisher-Yates: the first `flips` slots form a uniform subset.
            for (std::size_t j = 0; j < flips; ++j) {
                std::uniform_int_distribution<std::size_t> pick(j, n - 1);
                std::swap(idx[j], idx[pick(eng)]);
                y[idx[j]] = noise.replacement_scale * normal(eng);
            }
            return;
        }
    }
}

}  // namespace

NoiseModel parse_noise(std::string_view id, std::uint64_t seed) {
    NoiseModel m;
    m.seed = seed;
    const auto parts = split(id, ':');
    if (parts[0] == "none" && parts.size() == 1) return m;
    if (parts[0] == "add" && parts.size() == 2) {
        m.kind = NoiseKind::additive_bounded;
        m.magnitude = parse_double(parts[1]);
        if (!(m.magnitude >= 0.0)) throw ConfigError("additive noise magnitude must be >= 0");
        return m;
    }
    if (parts[0] == "flip" && parts.size() == 3) {
        m.kind = NoiseKind::flip_fraction;
        m.p = parse_double(parts[1]);
        m.replacement_scale = parse_double(parts[2]);
        if (!(m.p >= 0.0 && m.p <= 1.0)) throw ConfigError("flip fraction must lie in [0, 1]");
        return m;
    }
    if (parts[0] == "heavy" && (parts.size() == 2 || parts.size() == 3)) {
        m.kind = NoiseKind::oblivious_heavy;
        m.tail_k = parse_double(parts[1]);
        m.magnitude = parts.size() == 3 ? parse_double(parts[2]) : 1.0;
        if (!(m.tail_k > 2.0)) throw ConfigError("heavy noise exponent must exceed 2 (finite variance)");
        return m;
    }
    throw ConfigError("unknown noise model '" + std::string(id) + "'");
}

std::string noise_id(const NoiseModel& noise) {
    switch (noise.kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::additive_bounded: return "add:" + std::to_string(noise.magnitude);
        case NoiseKind::flip_fraction:
            return "flip:" + std::to_string(noise.p) + ":" + std::to_string(noise.replacement_scale);
        case NoiseKind::oblivious_heavy:
            return "heavy:" + std::to_string(noise.tail_k) + ":" + std::to_string(noise.magnitude);
    }
    return "none";
}

Vector planted_direction(std::size_t dim, double length, std::uint64_t seed) {
    Engine eng = make_engine(seed, Stream::planted, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector w(dim);
    double n2 = 0.0;
    while (n2 == 0.0) {
        for (double& v : w) v = normal(eng);
        n2 = norm_sq(w);
    }
    const double scale = length / std::sqrt(n2);
    for (double& v : w) v *= scale;
    return w;
}

Batch generate(const PlantedInstance& instance, const DistributionSpec& spec, std::size_t n, Stream stream,
               std::uint64_t counter) {
    if (instance.wstar.size() != spec.dim) throw PreconditionError("w* dimension mismatch");
    Batch b;
    b.xs = sample(spec, n, stream, counter);
    b.y.resize(n);
    kernels::project(b.xs, instance.wstar, b.y);
    for (double& v : b.y) v = detail::eval_raw(instance.activation, v);
    apply_noise(instance.noise, b.y, stream, counter);
    b.opt_certificate = label_certificate(b, instance.activation, instance.wstar);
    return b;
}

PlantedInstance make_instance(const DistributionSpec& spec, Vector wstar, double W, Activation activation,
                              NoiseModel noise, std::size_t certify_n) {
    if (!(W > 0.0)) throw ConfigError("W must be positive");
    if (norm(wstar) > W * (1.0 + 1e-12)) throw ConfigError("planted w* must lie in the ball B(W)");
    PlantedInstance inst{std::move(wstar), W, std::move(activation), noise, 0.0};
    if (noise.kind != NoiseKind::none) {
        inst.opt_upper_bound = generate(inst, spec, certify_n, Stream::evaluation, 0).opt_certificate;
    }
    return inst;
}

Batch truncate_labels(Batch batch, double M) {
    if (!(M > 0.0)) throw DomainError("truncation level M must be positive");
    for (double& y : batch.y) y = std::copysign(std::min(std::abs(y), M), y);
    return batch;
}

Batch truncate_nonmonotone(Batch batch, double M) {
    if (!(M > 0.0)) throw DomainError("truncation level M must be positive");
    for (double& y : batch.y) y = std::min(std::max(y, 0.0), M);
    return batch;
}

double label_certificate(const Batch& batch, const Activation& a, std::span<const double> wstar) {
    const std::size_t n = batch.y.size();
    if (n == 0) return 0.0;
    std::vector<double> proj(n);
    kernels::project(batch.xs, wstar, proj);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = detail::eval_raw(a, proj[j]) - batch.y[j];
        proj[j] = r * r;
    }
    return kernels::sum(proj) / static_cast<double>(n);
}

}  // namespace sn
