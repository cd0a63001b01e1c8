#include <cstdlib>
#include <string>

#include "kernels/scalar.hpp"

namespace trajzoom::kernels {
namespace {

const KernelTable kScalarTable{
    Isa::kScalar,
    &scalar::em_advance,
    &scalar::reflect_advance,
    &scalar::sum_squared_increments,
    &scalar::count_in_window,
    &scalar::linear_entropy,
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select_from_environment() {
  const char* env = std::getenv("TRAJZOOM_SIMD");
  const std::string wanted = env != nullptr ? env : "auto";
  if (wanted == "scalar") return kScalarTable;
  if ((wanted == "auto" || wanted == "avx2") && avx2::table() != nullptr && cpu_has_avx2()) {
    return *avx2::table();
  }
  if ((wanted == "auto" || wanted == "neon") && neon::table() != nullptr) return *neon::table();
  return kScalarTable;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return kScalarTable; }

std::vector<Isa> available_isas() {
  std::vector<Isa> isas{Isa::kScalar};
  if (avx2::table() != nullptr && cpu_has_avx2()) isas.push_back(Isa::kAvx2);
  if (neon::table() != nullptr) isas.push_back(Isa::kNeon);
  return isas;
}

const KernelTable& kernels_for(Isa isa) {
  if (isa == Isa::kAvx2 && avx2::table() != nullptr && cpu_has_avx2()) return *avx2::table();
  if (isa == Isa::kNeon && neon::table() != nullptr) return *neon::table();
  return kScalarTable;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_from_environment();
  return table;
}

}  // namespace trajzoom::kernels
