#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference
// and, on x86-64, an AVX2 variant; the active table is chosen once at
// startup from CPUID and can be overridden with SHADOWRANK_ISA=scalar.
//
// Elementwise kernels (axpy, scale, relax, monge) produce bit-identical
// results across variants. Reductions (dot products, distances) may differ
// in the last few ulps because lanes are summed in a different order.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace shadowrank::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct RelaxResult {
  double delta = std::numeric_limits<double>::infinity();
  std::size_t column = static_cast<std::size_t>(-1);
};

struct KernelTable {
  Isa isa;

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  // sum_j values[index[j]] * weights[j]
  double (*gather_dot)(const double* values, const std::int32_t* index,
                       const double* weights, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // true iff upper[j] + lower[j+1] >= upper[j+1] + lower[j] - tol for all j
  bool (*monge_rows)(const double* upper, const double* lower, std::size_t n,
                     double tol);
  // One Dijkstra relaxation sweep of the shortest-augmenting-path Hungarian
  // method. used[j] is 0 or all ones. For every column j with used[j] == 0:
  //   cur = (cost[j] - row_potential) - col_potential[j]
  //   if cur < min_slack[j]: min_slack[j] = cur, way[j] = from
  // and returns the smallest min_slack over unused columns (first index wins).
  RelaxResult (*hungarian_relax)(const double* cost, double row_potential,
                                 const double* col_potential, double* min_slack,
                                 std::int32_t* way, const std::uint64_t* used,
                                 std::int32_t from, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the build target or the running CPU lacks AVX2.
const KernelTable* avx2_table();

// Table used by the library.
const KernelTable& active();
// Forces a specific table; returns false if it is unavailable here.
bool select(Isa isa);

// Span conveniences over the active table.
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace shadowrank::kernels
