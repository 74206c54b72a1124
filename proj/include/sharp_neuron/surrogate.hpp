#pragma once

#include <cstddef>
#include <span>

#include "sharp_neuron/activation.hpp"
#include "sharp_neuron/dataset.hpp"
#include "sharp_neuron/matrix.hpp"

namespace sn {

struct LossPoint {
    Vector w;
    double l2 = 0.0;
    double sur = 0.0;
    Vector grad_sur;
    std::size_t n = 0;
};

// (1/N) sum (sigma(w.x_j) - y_j)^2
double l2_loss(std::span<const double> w, const Batch& batch, const Activation& a);

// (1/N) sum [Sigma(w.x_j) - y_j (w.x_j)], Sigma the antiderivative of sigma.
double surrogate_loss(std::span<const double> w, const Batch& batch, const Activation& a);

// (1/N) sum (sigma(w.x_j) - y_j) x_j
Vector surrogate_grad(std::span<const double> w, const Batch& batch, const Activation& a);
Vector surrogate_grad_serial(std::span<const double> w, const Batch& batch, const Activation& a);

// (1/N) sum (sigma(w.x_j) - sigma(w*.x_j)) x_j
Vector noise_free_grad(std::span<const double> w, std::span<const double> wstar, const Matrix& xs,
                       const Activation& a);

// (2/N) sum (sigma(w.x_j) - y_j) sigma'(w.x_j) x_j
Vector l2_grad(std::span<const double> w, const Batch& batch, const Activation& a);

LossPoint evaluate(std::span<const double> w, const Batch& batch, const Activation& a);

}  // namespace sn
