#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace shadowrank::kernels {

namespace {

const KernelTable kScalar{
    Isa::kScalar,           scalar::axpy,       scalar::scale,
    scalar::gather_dot,     scalar::squared_distance,
    scalar::monge_rows,     scalar::hungarian_relax,
};

#if SHADOWRANK_HAVE_AVX2
const KernelTable kAvx2{
    Isa::kAvx2,           avx2::axpy,       avx2::scale,
    avx2::gather_dot,     avx2::squared_distance,
    avx2::monge_rows,     avx2::hungarian_relax,
};
#endif

const KernelTable* detect() {
  const KernelTable* table = &kScalar;
  if (const KernelTable* wide = avx2_table()) table = wide;
  if (const char* env = std::getenv("SHADOWRANK_ISA")) {
    if (std::string_view(env) == "scalar") table = &kScalar;
  }
  return table;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if SHADOWRANK_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* table = isa == Isa::kScalar ? &kScalar : avx2_table();
  if (table == nullptr) return false;
  current().store(table, std::memory_order_release);
  return true;
}

}  // namespace shadowrank::kernels
