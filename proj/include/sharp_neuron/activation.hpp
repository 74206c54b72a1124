#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>

namespace sn {

enum class ActivationKind { relu, leaky_relu, gelu, swish };

// A scalar activation together with its declared (alpha, beta)-unbounded certificate.
// `positive_part` marks the truncation t -> max{sigma(t), 0} used for non-monotone activations.
struct Activation {
    ActivationKind kind = ActivationKind::relu;
    std::string name = "relu";
    double alpha = 1.0;
    double beta = 1.0;
    bool monotone = true;
    double leak = 0.0;
    bool positive_part = false;
};

Activation make_relu();
// leak in [0, 1/2]; sigma(t) = max{leak*t, (1-leak)*t}
Activation make_leaky_relu(double leak);
Activation make_gelu();
Activation make_swish();

// "relu", "leaky_relu:<lambda>", "gelu", "swish". Throws ConfigError otherwise.
Activation parse_activation(std::string_view id);

namespace detail {

inline double std_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
inline double std_normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

inline double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double eval_base(const Activation& a, double t) {
    switch (a.kind) {
        case ActivationKind::relu: return t > 0.0 ? t : 0.0;
        case ActivationKind::leaky_relu: return t > 0.0 ? (1.0 - a.leak) * t : a.leak * t;
        case ActivationKind::gelu: return t * std_normal_cdf(t);
        case ActivationKind::swish: return t * logistic(t);
    }
    return 0.0;
}

// Unchecked evaluation for the hot kernels; callers guarantee finite input.
inline double eval_raw(const Activation& a, double t) {
    const double v = eval_base(a, t);
    return (a.positive_part && v < 0.0) ? 0.0 : v;
}

double derivative_raw(const Activation& a, double t);

}  // namespace detail

// sigma(t). Throws DomainError on non-finite t.
double eval(const Activation& a, double t);

// sigma'(t); right-derivative at kinks.
double derivative(const Activation& a, double t);

// Sigma(t) = int_0^t sigma(r) dr. Closed form for ReLU/LeakyReLU, adaptive
// Gauss-Kronrod (absolute tolerance 1e-10) for GeLU/Swish.
double antiderivative(const Activation& a, double t);

struct UnboundedEstimate {
    double alpha_hat = 0.0;  // max |sigma'| on the grid over [-t_max, t_max]
    double beta_hat = 0.0;   // min sigma' on grid points in (0, t_max]
};

UnboundedEstimate certify_unbounded(const Activation& a, std::size_t grid_size, double t_max);

// True when the estimate is consistent with the declared certificate (1e-6 slack).
bool certificate_consistent(const Activation& a, const UnboundedEstimate& est);

// t -> max{sigma(t), 0}, flagged monotone with the same certificate.
// Throws PreconditionError for an already-monotone activation.
Activation truncate_positive(const Activation& a);

}  // namespace sn
