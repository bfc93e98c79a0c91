#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Dense numeric kernels used by the model and optimizer inner loops.
//
// Two implementations exist: a scalar reference and an AVX2 variant compiled
// into its own translation unit. One table is selected at startup (CPU probe,
// overridable via SANERLAB_KERNELS=scalar|avx2|auto or select()) and used for
// the whole process, so a run never mixes variants.
//
// Equivalence contract, enforced by tests:
//   - elementwise kernels (axpy .. sgd_momentum_step) produce bit-identical
//     results across variants: same operation order per element, no FMA,
//     and the build disables FP contraction;
//   - reductions (dot, sum_sq) may reassociate partial sums in the SIMD
//     variant and agree with the scalar reference only to rounding.

namespace sanerlab::kernels {

struct Ops {
  const char* name;

  // ----- reductions -----
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);

  // ----- elementwise -----
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
  // out = x + a * y
  void (*add_scaled)(const double* x, double a, const double* y, double* out, std::size_t n);
  // out = max(z, 0)
  void (*relu)(const double* z, double* out, std::size_t n);
  // delta = z > 0 ? delta : 0
  void (*relu_grad)(const double* z, double* delta, std::size_t n);
  // r = den != 0 ? num / den : quiet NaN
  void (*ratio)(const double* num, const double* den, double* r, std::size_t n);
  // mask = (r >= 0 && r < 1) ? 1 : 0; NaN never qualifies
  void (*mask_unit_interval)(const double* r, std::uint8_t* mask, std::size_t n);
  // out = mask ? a * g : g
  void (*scale_masked)(const double* g, const std::uint8_t* mask, double a, double* out, std::size_t n);
  // out = mask ? a : b
  void (*blend_masked)(const double* a, const double* b, const std::uint8_t* mask, double* out, std::size_t n);
  // buf = mu * buf + (g + wd * w); w -= eta * buf
  void (*sgd_momentum_step)(double* buf, double* w, const double* g, double mu, double wd, double eta, std::size_t n);
};

// Table currently in effect (resolves SANERLAB_KERNELS / CPU probe on first use).
const Ops& active();

// Force a specific table: "scalar", "avx2", or "auto".
// Throws std::invalid_argument on unknown names and std::runtime_error if the
// requested variant is not available on this machine.
void select(std::string_view name);

// Lookup by name for equivalence tests; nullptr if the variant is unavailable.
const Ops* variant(std::string_view name);

bool avx2_supported();

}  // namespace sanerlab::kernels
