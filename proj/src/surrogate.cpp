#include "sharp_neuron/surrogate.hpp"

#include "sharp_neuron/errors.hpp"
#include "sharp_neuron/kernels.hpp"

namespace sn {

namespace {

void require_batch(std::span<const double> w, const Batch& batch) {
    if (batch.xs.empty() || batch.y.empty()) throw DomainError("empty batch");
    if (w.size() != batch.xs.cols()) throw PreconditionError("weight dimension does not match batch");
}

}  // namespace

double l2_loss(std::span<const double> w, const Batch& batch, const Activation& a) {
    require_batch(w, batch);
    std::vector<double> r(batch.y.size());
    kernels::project(batch.xs, w, r);
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double e = detail::eval_raw(a, r[j]) - batch.y[j];
        r[j] = e * e;
    }
    return kernels::sum(r) / static_cast<double>(r.size());
}

double surrogate_loss(std::span<const double> w, const Batch& batch, const Activation& a) {
    require_batch(w, batch);
    std::vector<double> r(batch.y.size());
    kernels::project(batch.xs, w, r);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = antiderivative(a, r[j]) - batch.y[j] * r[j];
    return kernels::sum(r) / static_cast<double>(r.size());
}

Vector surrogate_grad(std::span<const double> w, const Batch& batch, const Activation& a) {
    require_batch(w, batch);
    Vector g(w.size());
    kernels::surrogate_gradient(batch.xs, batch.y, a, w, g);
    return g;
}

Vector surrogate_grad_serial(std::span<const double> w, const Batch& batch, const Activation& a) {
    require_batch(w, batch);
    Vector g(w.size());
    kernels::surrogate_gradient_serial(batch.xs, batch.y, a, w, g);
    return g;
}

Vector noise_free_grad(std::span<const double> w, std::span<const double> wstar, const Matrix& xs,
                       const Activation& a) {
    if (xs.empty()) throw DomainError("empty sample");
    std::vector<double> target(xs.rows());
    kernels::project(xs, wstar, target);
    for (double& t : target) t = detail::eval_raw(a, t);
    Vector g(w.size());
    kernels::surrogate_gradient(xs, target, a, w, g);
    return g;
}

Vector l2_grad(std::span<const double> w, const Batch& batch, const Activation& a) {
    require_batch(w, batch);
    std::vector<double> coef(batch.y.size());
    kernels::project(batch.xs, w, coef);
    for (std::size_t j = 0; j < coef.size(); ++j) {
        const double t = coef[j];
        coef[j] = 2.0 * (detail::eval_raw(a, t) - batch.y[j]) * detail::derivative_raw(a, t);
    }
    Vector g(w.size());
    kernels::weighted_row_mean(batch.xs, coef, g);
    return g;
}

LossPoint evaluate(std::span<const double> w, const Batch& batch, const Activation& a) {
    LossPoint p;
    p.w.assign(w.begin(), w.end());
    p.l2 = l2_loss(w, batch, a);
    p.sur = surrogate_loss(w, batch, a);
    p.grad_sur = surrogate_grad(w, batch, a);
    p.n = batch.y.size();
    return p;
}

}  // namespace sn
