#include "sanerlab/kernels.hpp"

// AVX2 kernel variants. Built only on x86-64 (this file gets -mavx2); the
// dispatcher never hands this table out unless the CPU reports AVX2.
//
// Elementwise kernels mirror the scalar reference operation-for-operation:
// plain mul/add/sub intrinsics, no FMA, identical tail handling, so results
// are bit-identical. Reductions use split accumulators and are only
// rounding-equivalent to the scalar reference.

#if defined(__AVX2__)

#include <immintrin.h>

#include <cstring>
#include <limits>

namespace sanerlab::kernels {
namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Widen 4 mask bytes to a 4-lane blend selector that is all-ones where the
// byte is zero (blendv picks the second operand on a set sign bit).
__m256d mask_is_zero(const std::uint8_t* mask) {
  std::uint32_t raw;
  std::memcpy(&raw, mask, 4);
  __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(static_cast<int>(raw)));
  return _mm256_castsi256_pd(_mm256_cmpeq_epi64(wide, _mm256_setzero_si256()));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, t);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  }
  for (; i < n; ++i) x[i] *= a;
}

void add_scaled_avx2(const double* x, double a, const double* y, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, t);
  }
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

void relu_avx2(const double* z, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(z + i), zero));
  }
  for (; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_grad_avx2(const double* z, double* delta, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gate = _mm256_cmp_pd(_mm256_loadu_pd(z + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(delta + i, _mm256_and_pd(_mm256_loadu_pd(delta + i), gate));
  }
  for (; i < n; ++i) delta[i] = z[i] > 0.0 ? delta[i] : 0.0;
}

void ratio_avx2(const double* num, const double* den, double* r, std::size_t n) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const __m256d vnan = _mm256_set1_pd(nan);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_loadu_pd(den + i);
    __m256d q = _mm256_div_pd(_mm256_loadu_pd(num + i), d);
    __m256d den_is_zero = _mm256_cmp_pd(d, zero, _CMP_EQ_OQ);
    _mm256_storeu_pd(r + i, _mm256_blendv_pd(q, vnan, den_is_zero));
  }
  for (; i < n; ++i) r[i] = den[i] != 0.0 ? num[i] / den[i] : nan;
}

void mask_unit_interval_avx2(const double* r, std::uint8_t* mask, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(r + i);
    __m256d in_range =
        _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_GE_OQ), _mm256_cmp_pd(v, one, _CMP_LT_OQ));
    int bits = _mm256_movemask_pd(in_range);
    mask[i + 0] = static_cast<std::uint8_t>(bits & 1);
    mask[i + 1] = static_cast<std::uint8_t>((bits >> 1) & 1);
    mask[i + 2] = static_cast<std::uint8_t>((bits >> 2) & 1);
    mask[i + 3] = static_cast<std::uint8_t>((bits >> 3) & 1);
  }
  for (; i < n; ++i) mask[i] = (r[i] >= 0.0 && r[i] < 1.0) ? 1 : 0;
}

void scale_masked_avx2(const double* g, const std::uint8_t* mask, double a, double* out,
                       std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(g + i);
    __m256d scaled = _mm256_mul_pd(va, v);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(scaled, v, mask_is_zero(mask + i)));
  }
  for (; i < n; ++i) out[i] = mask[i] ? a * g[i] : g[i];
}

void blend_masked_avx2(const double* a, const double* b, const std::uint8_t* mask, double* out,
                       std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                               mask_is_zero(mask + i)));
  }
  for (; i < n; ++i) out[i] = mask[i] ? a[i] : b[i];
}

void sgd_momentum_step_avx2(double* buf, double* w, const double* g, double mu, double wd,
                            double eta, std::size_t n) {
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vwd = _mm256_set1_pd(wd);
  const __m256d veta = _mm256_set1_pd(eta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vw = _mm256_loadu_pd(w + i);
    __m256d u = _mm256_add_pd(_mm256_loadu_pd(g + i), _mm256_mul_pd(vwd, vw));
    __m256d b = _mm256_add_pd(_mm256_mul_pd(vmu, _mm256_loadu_pd(buf + i)), u);
    _mm256_storeu_pd(buf + i, b);
    _mm256_storeu_pd(w + i, _mm256_sub_pd(vw, _mm256_mul_pd(veta, b)));
  }
  for (; i < n; ++i) {
    double u = g[i] + wd * w[i];
    double b = mu * buf[i] + u;
    buf[i] = b;
    w[i] = w[i] - eta * b;
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {
      "avx2",
      dot_avx2,
      sum_sq_avx2,
      axpy_avx2,
      scale_avx2,
      add_scaled_avx2,
      relu_avx2,
      relu_grad_avx2,
      ratio_avx2,
      mask_unit_interval_avx2,
      scale_masked_avx2,
      blend_masked_avx2,
      sgd_momentum_step_avx2,
  };
  return ops;
}

}  // namespace sanerlab::kernels

#endif  // __AVX2__
