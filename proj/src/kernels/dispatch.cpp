#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "tsc/kernels.hpp"

namespace tsc::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Ops& select() {
  if (const char* req = std::getenv("TSC_KERNELS")) {
    if (std::strcmp(req, "scalar") == 0) return scalar_ops();
    if (std::strcmp(req, "avx2") == 0 && avx2_available()) return avx2_ops();
    std::fprintf(stderr,
                 "tsc: TSC_KERNELS=%s not available, using scalar kernels\n",
                 req);
    return scalar_ops();
  }
  return avx2_available() ? avx2_ops() : scalar_ops();
}

}  // namespace

const Ops& ops() {
  static const Ops& selected = select();
  return selected;
}

}  // namespace tsc::kernels
