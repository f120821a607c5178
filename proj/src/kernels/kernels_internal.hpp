#pragma once

#include "shadowrank/kernels.hpp"

namespace shadowrank::kernels {

namespace scalar {
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, const double* x, double* out, std::size_t n);
double gather_dot(const double* values, const std::int32_t* index,
                  const double* weights, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
bool monge_rows(const double* upper, const double* lower, std::size_t n, double tol);
RelaxResult hungarian_relax(const double* cost, double row_potential,
                            const double* col_potential, double* min_slack,
                            std::int32_t* way, const std::uint64_t* used,
                            std::int32_t from, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define SHADOWRANK_HAVE_AVX2 1
namespace avx2 {
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, const double* x, double* out, std::size_t n);
double gather_dot(const double* values, const std::int32_t* index,
                  const double* weights, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
bool monge_rows(const double* upper, const double* lower, std::size_t n, double tol);
RelaxResult hungarian_relax(const double* cost, double row_potential,
                            const double* col_potential, double* min_slack,
                            std::int32_t* way, const std::uint64_t* used,
                            std::int32_t from, std::size_t n);
}  // namespace avx2
#else
#define SHADOWRANK_HAVE_AVX2 0
#endif

}  // namespace shadowrank::kernels
