#include "sanerlab/kernels.hpp"

#include <limits>

// Scalar reference kernels. These define the semantics the SIMD variants must
// reproduce; keep every elementwise loop a straight per-element translation of
// the documented operation order.

namespace sanerlab::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void add_scaled_scalar(const double* x, double a, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}

void relu_scalar(const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_grad_scalar(const double* z, double* delta, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) delta[i] = z[i] > 0.0 ? delta[i] : 0.0;
}

void ratio_scalar(const double* num, const double* den, double* r, std::size_t n) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < n; ++i) r[i] = den[i] != 0.0 ? num[i] / den[i] : nan;
}

void mask_unit_interval_scalar(const double* r, std::uint8_t* mask, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) mask[i] = (r[i] >= 0.0 && r[i] < 1.0) ? 1 : 0;
}

void scale_masked_scalar(const double* g, const std::uint8_t* mask, double a, double* out,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? a * g[i] : g[i];
}

void blend_masked_scalar(const double* a, const double* b, const std::uint8_t* mask, double* out,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? a[i] : b[i];
}

void sgd_momentum_step_scalar(double* buf, double* w, const double* g, double mu, double wd,
                              double eta, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double u = g[i] + wd * w[i];
    double b = mu * buf[i] + u;
    buf[i] = b;
    w[i] = w[i] - eta * b;
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",
      dot_scalar,
      sum_sq_scalar,
      axpy_scalar,
      scale_scalar,
      add_scaled_scalar,
      relu_scalar,
      relu_grad_scalar,
      ratio_scalar,
      mask_unit_interval_scalar,
      scale_masked_scalar,
      blend_masked_scalar,
      sgd_momentum_step_scalar,
  };
  return ops;
}

}  // namespace sanerlab::kernels
