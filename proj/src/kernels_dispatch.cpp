#include "sanerlab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace sanerlab::kernels {

const Ops& scalar_ops();
#if defined(SANERLAB_HAVE_AVX2_TU)
const Ops& avx2_ops();
#endif

bool avx2_supported() {
#if defined(SANERLAB_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve(std::string_view name) {
  if (name == "auto") {
#if defined(SANERLAB_HAVE_AVX2_TU)
    if (avx2_supported()) return &avx2_ops();
#endif
    return &scalar_ops();
  }
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") {
    if (!avx2_supported()) {
      throw std::runtime_error("kernel variant 'avx2' is not available on this machine");
    }
#if defined(SANERLAB_HAVE_AVX2_TU)
    return &avx2_ops();
#endif
  }
  throw std::invalid_argument("unknown kernel variant '" + std::string(name) +
                              "' (expected scalar, avx2, or auto)");
}

}  // namespace

const Ops& active() {
  const Ops* current = g_active.load(std::memory_order_acquire);
  if (!current) {
    const char* env = std::getenv("SANERLAB_KERNELS");
    current = resolve(env ? std::string_view(env) : std::string_view("auto"));
    g_active.store(current, std::memory_order_release);
  }
  return *current;
}

void select(std::string_view name) {
  g_active.store(resolve(name), std::memory_order_release);
}

const Ops* variant(std::string_view name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2" && avx2_supported()) {
#if defined(SANERLAB_HAVE_AVX2_TU)
    return &avx2_ops();
#endif
  }
  return nullptr;
}

}  // namespace sanerlab::kernels
