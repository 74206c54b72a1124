#include "sharp_neuron/activation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <limits>

#include "sharp_neuron/errors.hpp"

namespace sn {

namespace {

constexpr double kQuadratureTolerance = 1e-10;

void require_finite(double t) {
    if (!std::isfinite(t)) throw DomainError("activation input must be finite");
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

}  // namespace

Activation make_relu() { return Activation{ActivationKind::relu, "relu", 1.0, 1.0, true, 0.0, false}; }

Activation make_leaky_relu(double leak) {
    if (!(leak >= 0.0 && leak <= 0.5)) throw ConfigError("leaky_relu parameter must lie in [0, 1/2]");
    return Activation{ActivationKind::leaky_relu, "leaky_relu", 1.0 - leak, 1.0 - leak, true, leak, false};
}

// sup_t sigma'(t) = Phi(sqrt2) + sqrt2 phi(sqrt2) = 1.1289..., so the Lipschitz constant is 1.13, not 1.1.
Activation make_gelu() { return Activation{ActivationKind::gelu, "gelu", 1.13, 0.5, false, 0.0, false}; }

Activation make_swish() { return Activation{ActivationKind::swish, "swish", 1.2, 0.4, false, 0.0, false}; }

Activation parse_activation(std::string_view id) {
    if (id == "relu") return make_relu();
    if (id == "gelu") return make_gelu();
    if (id == "swish") return make_swish();
    constexpr std::string_view leaky = "leaky_relu:";
    if (id.starts_with(leaky)) return make_leaky_relu(parse_double(id.substr(leaky.size())));
    throw ConfigError("unknown activation '" + std::string(id) + "'");
}

namespace detail {

double derivative_raw(const Activation& a, double t) {
    if (a.positive_part && t < 0.0) return 0.0;
    switch (a.kind) {
        case ActivationKind::relu: return t >= 0.0 ? 1.0 : 0.0;
        case ActivationKind::leaky_relu: return t >= 0.0 ? 1.0 - a.leak : a.leak;
        case ActivationKind::gelu: return std_normal_cdf(t) + t * std_normal_pdf(t);
        case ActivationKind::swish: {
            const double s = logistic(t);
            return s + t * s * (1.0 - s);
        }
    }
    return 0.0;
}

}  // namespace detail

double eval(const Activation& a, double t) {
    require_finite(t);
    return detail::eval_raw(a, t);
}

double derivative(const Activation& a, double t) {
    require_finite(t);
    return detail::derivative_raw(a, t);
}

double antiderivative(const Activation& a, double t) {
    require_finite(t);
    switch (a.kind) {
        case ActivationKind::relu: return t > 0.0 ? 0.5 * t * t : 0.0;
        case ActivationKind::leaky_relu: return 0.5 * t * t * (t > 0.0 ? 1.0 - a.leak : a.leak);
        case ActivationKind::gelu:
        case ActivationKind::swish: break;
    }
    if (t == 0.0) return 0.0;
    // sigma < 0 on t < 0 for the non-monotone family, so the positive part vanishes there.
    if (a.positive_part && t < 0.0) return 0.0;

    // Integrate sigma - ReLU, which stays bounded and decays, and add [t]_+^2 / 2 exactly. This keeps
    // the quadrature error absolute rather than relative to a value growing like t^2.
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&a](double r) { return detail::eval_base(a, r) - (r > 0.0 ? r : 0.0); };
    double err = 0.0;
    const double rest = gauss_kronrod<double, 31>::integrate(f, 0.0, t, 15, 1e-12, &err);
    if (!std::isfinite(rest) || err > kQuadratureTolerance) {
        throw NumericError("antiderivative quadrature did not reach 1e-10 at t=" + std::to_string(t));
    }
    return (t > 0.0 ? 0.5 * t * t : 0.0) + rest;
}

UnboundedEstimate certify_unbounded(const Activation& a, std::size_t grid_size, double t_max) {
    if (grid_size < 100 || !(t_max > 0.0)) throw PreconditionError("certify_unbounded needs grid_size >= 100 and t_max > 0");
    UnboundedEstimate est{0.0, std::numeric_limits<double>::infinity()};
    const double step = 2.0 * t_max / static_cast<double>(grid_size - 1);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double t = -t_max + step * static_cast<double>(i);
        const double d = detail::derivative_raw(a, t);
        est.alpha_hat = std::max(est.alpha_hat, std::abs(d));
        if (t > 0.0) est.beta_hat = std::min(est.beta_hat, d);
    }
    return est;
}

bool certificate_consistent(const Activation& a, const UnboundedEstimate& est) {
    return est.alpha_hat <= a.alpha + 1e-6 && est.beta_hat >= a.beta - 1e-6;
}

Activation truncate_positive(const Activation& a) {
    if (a.monotone) throw PreconditionError("truncate_positive applies to non-monotone activations only");
    Activation out = a;
    out.name = a.name + "+";
    out.monotone = true;
    out.positive_part = true;
    return out;
}

}  // namespace sn
