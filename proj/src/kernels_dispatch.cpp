#include "rme/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace rme::kernels {
namespace {

Backend initial_backend() {
  const char* env = std::getenv("RME_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  if (avx2_table() != nullptr && cpu_has_avx2()) return Backend::Avx2;
  return Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

} // namespace

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() noexcept {
  if (current().load(std::memory_order_relaxed) == Backend::Avx2) return *avx2_table();
  return scalar_table();
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

bool set_backend(Backend b) noexcept {
  if (b == Backend::Avx2 && (avx2_table() == nullptr || !cpu_has_avx2())) {
    current().store(Backend::Scalar);
    return false;
  }
  current().store(b);
  return true;
}

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

} // namespace rme::kernels
