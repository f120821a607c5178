#include "kernels_internal.hpp"

namespace shadowrank::kernels::scalar {

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

double gather_dot(const double* values, const std::int32_t* index,
                  const double* weights, std::size_t n) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += values[index[j]] * weights[j];
  return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

bool monge_rows(const double* upper, const double* lower, std::size_t n, double tol) {
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double diag = upper[j] + lower[j + 1];
    const double anti = upper[j + 1] + lower[j];
    if (diag - anti < -tol) return false;
  }
  return true;
}

RelaxResult hungarian_relax(const double* cost, double row_potential,
                            const double* col_potential, double* min_slack,
                            std::int32_t* way, const std::uint64_t* used,
                            std::int32_t from, std::size_t n) {
  RelaxResult best;
  for (std::size_t j = 0; j < n; ++j) {
    if (used[j] != 0) continue;
    const double cur = (cost[j] - row_potential) - col_potential[j];
    if (cur < min_slack[j]) {
      min_slack[j] = cur;
      way[j] = from;
    }
    if (min_slack[j] < best.delta) {
      best.delta = min_slack[j];
      best.column = j;
    }
  }
  return best;
}

}  // namespace shadowrank::kernels::scalar
