#include "sharp_neuron/distribution.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/kernels.hpp"

namespace sn {

namespace {

constexpr std::size_t kSampleChunk = 64;
const double kLaplaceScale = 1.0 / std::numbers::sqrt2;  // unit variance

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

double heavy_sd(double k) { return std::sqrt(2.0 / ((k - 1.0) * (k - 2.0))); }

double heavy_kurtosis(double k) { return 6.0 * (k - 1.0) * (k - 2.0) / ((k - 3.0) * (k - 4.0)); }

// Discrete Gaussian on theta*Z by rejection from round(z/theta), z ~ N(0,1). The acceptance
// ratio exp(-(theta k)^2/2) / q(k) is bounded; we normalize by its maximum over k.
class DiscreteGaussianSampler {
public:
    explicit DiscreteGaussianSampler(double theta) : theta_(theta), k_max_(std::ceil(30.0 / theta)) {
        double best = 0.0;
        for (double k = 0.0; k <= k_max_; k += 1.0) best = std::max(best, ratio(k));
        bound_ = best;
    }

    double operator()(Engine& eng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (;;) {
            const double k = std::round(normal(eng) / theta_);
            const double u = unif(eng);
            if (std::abs(k) > k_max_) continue;
            if (u * bound_ < ratio(std::abs(k))) return theta_ * k;
        }
    }

private:
    // Proposal mass of integer k >= 0 under round(z/theta).
    double proposal(double k) const {
        const double s = theta_ / std::numbers::sqrt2;
        if (k == 0.0) return std::erf(0.5 * s);
        return 0.5 * (std::erfc((k - 0.5) * s) - std::erfc((k + 0.5) * s));
    }
    double ratio(double k) const {
        const double q = proposal(k);
        if (q <= 0.0) return 0.0;
        return theta_ * normal_pdf(theta_ * k) / q;
    }

    double theta_;
    double k_max_;
    double bound_ = 1.0;
};

template <typename CoordFn>
void fill_chunk(Matrix& out, std::size_t chunk, const DistributionSpec& spec, Stream stream, std::uint64_t counter,
                CoordFn&& coord) {
    Engine eng = make_engine(spec.seed, stream, counter, chunk);
    const std::size_t begin = chunk * kSampleChunk;
    const std::size_t end = std::min(out.rows(), begin + kSampleChunk);
    for (std::size_t i = begin; i < end; ++i) {
        auto row = out.row(i);
        for (double& v : row) v = coord(eng);
    }
}

void fill_chunk_for(Matrix& out, std::size_t chunk, const DistributionSpec& spec, Stream stream,
                    std::uint64_t counter, const DiscreteGaussianSampler* dg) {
    switch (spec.family) {
        case Family::gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            fill_chunk(out, chunk, spec, stream, counter, [&](Engine& e) { return normal(e); });
            break;
        }
        case Family::laplace: {
            std::exponential_distribution<double> expo(1.0 / kLaplaceScale);
            std::bernoulli_distribution sign(0.5);
            fill_chunk(out, chunk, spec, stream, counter, [&](Engine& e) {
                const double m = expo(e);
                return sign(e) ? m : -m;
            });
            break;
        }
        case Family::heavy_tail: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::bernoulli_distribution sign(0.5);
            const double inv_k = -1.0 / spec.heavy_k;
            const double inv_sd = 1.0 / heavy_sd(spec.heavy_k);
            fill_chunk(out, chunk, spec, stream, counter, [&](Engine& e) {
                const double u = 1.0 - unif(e);  // (0, 1]
                const double m = (std::pow(u, inv_k) - 1.0) * inv_sd;
                return sign(e) ? m : -m;
            });
            break;
        }
        case Family::discrete_gaussian:
            fill_chunk(out, chunk, spec, stream, counter, [&](Engine& e) { return (*dg)(e); });
            break;
        case Family::hypergrid: {
            std::uniform_int_distribution<int> grid(-1, 1);
            fill_chunk(out, chunk, spec, stream, counter, [&](Engine& e) { return static_cast<double>(grid(e)); });
            break;
        }
    }
}

void validate(const DistributionSpec& spec) {
    if (spec.dim == 0) throw ConfigError("dimension must be positive");
    if (!(spec.tail_B >= 1.0)) throw ConfigError("tail_B must be >= 1");
    if (!(spec.tail_rho > 0.0 && spec.tail_rho <= 1.0)) throw ConfigError("tail_rho must lie in (0, 1]");
    if (spec.family == Family::heavy_tail && !(spec.heavy_k > 4.0 + spec.tail_rho)) {
        throw ConfigError("heavy tail exponent k must exceed 4 + rho");
    }
    if (spec.family == Family::discrete_gaussian && !(spec.theta > 0.0 && spec.theta <= 1.0)) {
        throw ConfigError("discrete gaussian theta must lie in (0, 1]");
    }
}

Matrix sample_impl(const DistributionSpec& spec, std::size_t n, Stream stream, std::uint64_t counter, bool parallel) {
    validate(spec);
    if (n == 0) throw DomainError("sample size must be >= 1");
    Matrix out(n, spec.dim);
    std::optional<DiscreteGaussianSampler> dg;
    if (spec.family == Family::discrete_gaussian) dg.emplace(spec.theta);
    const auto chunks = static_cast<std::int64_t>((n + kSampleChunk - 1) / kSampleChunk);
    const DiscreteGaussianSampler* dgp = dg ? &*dg : nullptr;
    const bool go_parallel = parallel && n * spec.dim >= kernels::kParallelThreshold;
#pragma omp parallel for schedule(static) if (go_parallel)
    for (std::int64_t c = 0; c < chunks; ++c) {
        fill_chunk_for(out, static_cast<std::size_t>(c), spec, stream, counter, dgp);
    }
    return out;
}

// int_a^inf i s^(i-1) g(s) ds for the un-capped envelope g of each family.
double envelope_tail_integral(const DistributionSpec& spec, int order, double a) {
    auto subgaussian = [&](double c, double v) {
        const double e = std::exp(-a * a / (2.0 * v));
        return order == 2 ? 2.0 * c * v * e : 4.0 * c * v * (a * a + 2.0 * v) * e;
    };
    switch (spec.family) {
        case Family::gaussian: return subgaussian(1.0, 1.0);
        case Family::hypergrid: return subgaussian(2.0, 1.0);
        case Family::discrete_gaussian: return subgaussian(4.0, 4.0);
        case Family::laplace: {
            const double B = spec.tail_B;
            const double e = std::exp(-a / B);
            if (order == 2) return 2.0 * B * (a + B) * e;
            return 4.0 * B * (a * a * a + 3.0 * B * a * a + 6.0 * B * B * a + 6.0 * B * B * B) * e;
        }
        case Family::heavy_tail: {
            const double k = spec.heavy_k;
            return order * spec.tail_B * std::pow(a, order - k) / (k - order);
        }
    }
    return 0.0;
}

// Point where the un-capped envelope crosses 1 (0 if it never exceeds 1 on s >= 0).
double envelope_unit_crossing(const DistributionSpec& spec) {
    switch (spec.family) {
        case Family::gaussian:
        case Family::laplace: return 0.0;
        case Family::hypergrid: return std::sqrt(2.0 * std::log(2.0));
        case Family::discrete_gaussian: return std::sqrt(8.0 * std::log(4.0));
        case Family::heavy_tail: return std::pow(spec.tail_B, 1.0 / spec.heavy_k);
    }
    return 0.0;
}

double raw_envelope(const DistributionSpec& spec, double r) {
    switch (spec.family) {
        case Family::gaussian: return std::exp(-0.5 * r * r);
        case Family::hypergrid: return 2.0 * std::exp(-0.5 * r * r);
        case Family::discrete_gaussian: return 4.0 * std::exp(-r * r / 8.0);
        case Family::laplace: return std::exp(-r / spec.tail_B);
        case Family::heavy_tail: return spec.tail_B / std::pow(r, spec.heavy_k);
    }
    return 1.0;
}

// Smallest r with f(r) <= kappa for non-increasing f, bracket width <= 1e-6.
template <typename F>
double bisect_level(F&& f, double kappa) {
    double lo = 0.0;
    double hi = 1.0;
    while (f(hi) > kappa) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw NumericError("level set bisection failed to bracket");
    }
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) <= kappa) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace

double heavy_tail_default_B(double k) {
    double bulk = 0.0;
    for (double r = 1.0; r <= 40.0; r += 0.01) bulk = std::max(bulk, std::pow(r, k) * 2.0 * (1.0 - normal_cdf(r)));
    const double rho = std::min(1.0, (k - 4.0) / 2.0);
    const double kurt = heavy_kurtosis(k) * rho / 5.0;
    // Standardized coordinate: Pr[|x_i| >= r] = (1 + sd r)^-k, so r^k Pr[...] climbs to sd^-k.
    const double sd = std::sqrt(2.0 / ((k - 1.0) * (k - 2.0)));
    const double coord = std::pow(sd, -k);
    return std::ceil(1.25 * std::max({1.0, bulk, kurt, coord}));
}

DistributionSpec make_gaussian(std::size_t dim, std::uint64_t seed) {
    return DistributionSpec{Family::gaussian, dim, 1.0, 1.0, seed, 0.0, 1.0};
}

DistributionSpec make_laplace(std::size_t dim, std::uint64_t seed) {
    return DistributionSpec{Family::laplace, dim, 2.0, 1.0, seed, 0.0, 1.0};
}

DistributionSpec make_heavy_tail(std::size_t dim, double k, double B, std::uint64_t seed) {
    if (!(k > 4.0)) throw ConfigError("heavy tail exponent k must exceed 4");
    const double rho = std::min(1.0, (k - 4.0) / 2.0);
    DistributionSpec spec{Family::heavy_tail, dim, B > 0.0 ? B : heavy_tail_default_B(k), rho, seed, k, 1.0};
    validate(spec);
    return spec;
}

DistributionSpec make_discrete_gaussian(std::size_t dim, double theta, std::uint64_t seed) {
    DistributionSpec spec{Family::discrete_gaussian, dim, std::exp(9.0), 1.0, seed, 0.0, theta};
    validate(spec);
    return spec;
}

DistributionSpec make_hypergrid(std::size_t dim, std::uint64_t seed) {
    return DistributionSpec{Family::hypergrid, dim, 10.0, 1.0, seed, 0.0, 1.0};
}

DistributionSpec parse_distribution(std::string_view id, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ConfigError("dimension must be positive");
    if (id == "gaussian") return make_gaussian(dim, seed);
    if (id == "laplace") return make_laplace(dim, seed);
    if (id == "hypergrid") return make_hypergrid(dim, seed);
    if (id.starts_with("dgauss:")) return make_discrete_gaussian(dim, parse_double(id.substr(7)), seed);
    if (id.starts_with("heavy:")) {
        auto rest = id.substr(6);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) return make_heavy_tail(dim, parse_double(rest), 0.0, seed);
        return make_heavy_tail(dim, parse_double(rest.substr(0, colon)), parse_double(rest.substr(colon + 1)), seed);
    }
    throw ConfigError("unsupported distribution family '" + std::string(id) + "'");
}

std::string distribution_id(const DistributionSpec& spec) {
    switch (spec.family) {
        case Family::gaussian: return "gaussian";
        case Family::laplace: return "laplace";
        case Family::hypergrid: return "hypergrid";
        case Family::discrete_gaussian: return "dgauss:" + std::to_string(spec.theta);
        case Family::heavy_tail: return "heavy:" + std::to_string(spec.heavy_k);
    }
    return "unknown";
}

Matrix sample(const DistributionSpec& spec, std::size_t n, Stream stream, std::uint64_t counter) {
    return sample_impl(spec, n, stream, counter, true);
}

Matrix sample_serial(const DistributionSpec& spec, std::size_t n, Stream stream, std::uint64_t counter) {
    return sample_impl(spec, n, stream, counter, false);
}

double tail_h(const DistributionSpec& spec, double r) {
    if (!(r >= 1.0)) throw DomainError("tail_h is defined for r >= 1");
    return std::min(1.0, raw_envelope(spec, r));
}

double moment_envelope(const DistributionSpec& spec, int order, double r) {
    if (order != 2 && order != 4) throw PreconditionError("moment_envelope supports orders 2 and 4");
    if (r < 0.0) throw DomainError("moment_envelope needs r >= 0");
    const double knee = std::max(1.0, envelope_unit_crossing(spec));
    if (r < knee) {
        // Envelope is 1 on [r, knee): r^i + (knee^i - r^i) collapses to knee^i.
        return std::pow(knee, order) + envelope_tail_integral(spec, order, knee);
    }
    return std::pow(r, order) * std::min(1.0, raw_envelope(spec, r)) + envelope_tail_integral(spec, order, r);
}

double coordinate_second_moment(const DistributionSpec& spec) {
    switch (spec.family) {
        case Family::gaussian:
        case Family::laplace:
        case Family::heavy_tail: return 1.0;
        case Family::hypergrid: return 2.0 / 3.0;
        case Family::discrete_gaussian: {
            double num = 0.0, den = 1.0;
            for (double k = 1.0; spec.theta * k < 40.0; k += 1.0) {
                const double z = spec.theta * k;
                const double w = std::exp(-0.5 * z * z);
                num += 2.0 * z * z * w;
                den += 2.0 * w;
            }
            return num / den;
        }
    }
    return 1.0;
}

double coordinate_fourth_moment(const DistributionSpec& spec) {
    switch (spec.family) {
        case Family::gaussian: return 3.0;
        case Family::laplace: return 6.0;
        case Family::heavy_tail: return heavy_kurtosis(spec.heavy_k);
        case Family::hypergrid: return 2.0 / 3.0;
        case Family::discrete_gaussian: {
            double num = 0.0, den = 1.0;
            for (double k = 1.0; spec.theta * k < 40.0; k += 1.0) {
                const double z = spec.theta * k;
                const double w = std::exp(-0.5 * z * z);
                num += 2.0 * z * z * z * z * w;
                den += 2.0 * w;
            }
            return num / den;
        }
    }
    return 3.0;
}

std::vector<double> projected_sample(const DistributionSpec& spec, std::span<const double> u, std::size_t n) {
    if (u.size() != spec.dim) throw PreconditionError("direction dimension mismatch");
    if (std::abs(norm(u) - 1.0) > 1e-9) throw PreconditionError("direction must be a unit vector");
    const Matrix xs = sample(spec, n, Stream::moments, 0);
    std::vector<double> proj(n);
    kernels::project(xs, u, proj);
    return proj;
}

MomentEstimate truncated_moment(std::span<const double> projections, int order, double r) {
    const std::size_t n = projections.size();
    if (n == 0) throw DomainError("empty projection sample");
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = projections[i];
        const double p2 = p * p;
        terms[i] = std::abs(p) >= r ? (order == 2 ? p2 : p2 * p2) : 0.0;
    }
    const auto s = kernels::mean_and_stderr(terms);
    return {s.mean, s.std_error, n};
}

MomentEstimate exceedance(std::span<const double> projections, double r) {
    const std::size_t n = projections.size();
    if (n == 0) throw DomainError("empty projection sample");
    std::size_t hits = 0;
    for (double p : projections) hits += std::abs(p) >= r ? 1 : 0;
    const double phat = static_cast<double>(hits) / static_cast<double>(n);
    return {phat, std::sqrt(std::max(phat * (1.0 - phat), 0.0) / static_cast<double>(n)), n};
}

double gaussian_H2(double r) {
    if (r <= 0.0) return 1.0;
    return 2.0 * (r * normal_pdf(r) + 1.0 - normal_cdf(r));
}

double gaussian_H4(double r) {
    if (r <= 0.0) return 3.0;
    return 2.0 * ((r * r * r + 3.0 * r) * normal_pdf(r) + 3.0 * (1.0 - normal_cdf(r)));
}

MomentEstimate H2(const DistributionSpec& spec, std::span<const double> u, double r, std::size_t n) {
    if (std::abs(norm(u) - 1.0) > 1e-9) throw PreconditionError("direction must be a unit vector");
    if (spec.family == Family::gaussian) return {gaussian_H2(r), 0.0, 0};
    return truncated_moment(projected_sample(spec, u, n), 2, r);
}

MomentEstimate H4(const DistributionSpec& spec, std::span<const double> u, double r, std::size_t n) {
    if (std::abs(norm(u) - 1.0) > 1e-9) throw PreconditionError("direction must be a unit vector");
    if (spec.family == Family::gaussian) return {gaussian_H4(r), 0.0, 0};
    return truncated_moment(projected_sample(spec, u, n), 4, r);
}

double H2_inverse(const DistributionSpec& spec, double kappa) {
    if (!(kappa > 0.0)) throw DomainError("H2_inverse needs kappa > 0");
    if (kappa >= coordinate_second_moment(spec)) return 0.0;
    if (spec.family == Family::gaussian) return bisect_level(gaussian_H2, kappa);
    return bisect_level([&](double r) { return moment_envelope(spec, 2, r); }, kappa);
}

double H4_inverse(const DistributionSpec& spec, double kappa) {
    if (!(kappa > 0.0)) throw DomainError("H4_inverse needs kappa > 0");
    if (spec.family == Family::gaussian) {
        if (kappa >= 3.0) return 0.0;
        return bisect_level(gaussian_H4, kappa);
    }
    return bisect_level([&](double r) { return moment_envelope(spec, 4, r); }, kappa);
}

MarginCertificate estimate_margin(const DistributionSpec& spec, std::span<const double> wstar, double gamma,
                                  std::size_t n) {
    const double wn = norm(wstar);
    if (!(wn > 0.0)) throw DomainError("estimate_margin needs w* != 0");
    if (wstar.size() != spec.dim) throw PreconditionError("w* dimension mismatch");
    if (n < 10'000) throw PreconditionError("estimate_margin needs n >= 1e4");
    const std::size_t d = spec.dim;
    MarginCertificate cert;
    cert.gamma = gamma;
    cert.wstar_direction.assign(wstar.begin(), wstar.end());
    for (double& v : cert.wstar_direction) v /= wn;

    const Matrix xs = sample(spec, n, Stream::margin, 0);
    std::vector<double> proj(n);
    kernels::project(xs, cert.wstar_direction, proj);

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (proj[i] < gamma) continue;
        ++hits;
        Eigen::Map<const Eigen::VectorXd> x(xs.row(i).data(), static_cast<Eigen::Index>(d));
        acc.selfadjointView<Eigen::Lower>().rankUpdate(x);
    }
    acc = acc.selfadjointView<Eigen::Lower>();
    acc /= static_cast<double>(n);

    cert.event_fraction = static_cast<double>(hits) / static_cast<double>(n);
    cert.second_moment = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            cert.second_moment(i, j) = acc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (hits == 0) {
        cert.degenerate = true;
        cert.lambda = 0.0;
        return cert;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(acc, Eigen::EigenvaluesOnly);
    cert.lambda = std::max(0.0, solver.eigenvalues()(0));
    return cert;
}

}  // namespace sn
