#include "bac/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace bac::kernels {
namespace {

const Ops* g_active = nullptr;

const Ops& resolve(Mode mode) {
  switch (mode) {
    case Mode::Scalar:
      return scalar_ops();
    case Mode::Avx2:
      if (!avx2_available()) throw std::runtime_error("kernels: avx2 not supported on this cpu");
      return avx2_ops();
    case Mode::Auto:
    default:
      return avx2_available() ? avx2_ops() : scalar_ops();
  }
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Mode parse_mode(const std::string& name) {
  if (name == "auto") return Mode::Auto;
  if (name == "scalar") return Mode::Scalar;
  if (name == "avx2") return Mode::Avx2;
  throw std::invalid_argument("kernels: unknown mode '" + name + "' (auto|scalar|avx2)");
}

const Ops& active() {
  if (!g_active) {
    Mode mode = Mode::Auto;
    if (const char* env = std::getenv("BAC_KERNELS")) mode = parse_mode(env);
    g_active = &resolve(mode);
  }
  return *g_active;
}

void select(Mode mode) { g_active = &resolve(mode); }

}  // namespace bac::kernels
