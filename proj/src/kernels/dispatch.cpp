#include <cstdlib>
#include <string_view>

#include "landscape/kernels.hpp"

namespace landscape::kernels {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(LANDSCAPE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  if (const char* forced = std::getenv("LANDSCAPE_KERNELS")) {
    if (std::string_view(forced) == "scalar") return scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
#if defined(LANDSCAPE_HAVE_AVX2)
  static const bool ok = cpu_has_avx2_fma();
  return ok ? &detail::avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace landscape::kernels
