#include <atomic>
#include <cstdlib>
#include <string>

#include "rmd/errors.hpp"
#include "rmd/kernels/kernels.hpp"

namespace rmd::kernels {

#ifdef RMD_HAVE_AVX2
const Ops& avx2_ops_table();  // defined in kernels_avx2.cpp
#endif

const Ops* avx2_ops() {
#ifdef RMD_HAVE_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_ops_table();
#endif
  return nullptr;
}

namespace {

const Ops* resolve(std::string_view name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") {
    const Ops* p = avx2_ops();
    if (!p) throw_error(ErrorCode::invalid_input, "kernel backend avx2 unavailable on this CPU");
    return p;
  }
  if (name.empty() || name == "auto") {
    const Ops* p = avx2_ops();
    return p ? p : &scalar_ops();
  }
  throw_error(ErrorCode::invalid_input, "unknown kernel backend: " + std::string(name));
}

std::atomic<const Ops*>& active_slot() {
  static std::atomic<const Ops*> slot{[] {
    const char* env = std::getenv("RMD_KERNELS");
    return resolve(env ? std::string_view(env) : std::string_view("auto"));
  }()};
  return slot;
}

}  // namespace

const Ops& ops() { return *active_slot().load(std::memory_order_relaxed); }

void set_backend(std::string_view name) {
  active_slot().store(resolve(name), std::memory_order_relaxed);
}

std::string_view active_backend() { return ops().name; }

}  // namespace rmd::kernels
