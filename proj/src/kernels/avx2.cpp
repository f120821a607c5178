#include "kernels_internal.hpp"

#if SHADOWRANK_HAVE_AVX2

#include <immintrin.h>

#define SHADOWRANK_AVX2 __attribute__((target("avx2")))

namespace shadowrank::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

SHADOWRANK_AVX2 inline double horizontal_sum(__m256d v) {
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

SHADOWRANK_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d prod = _mm256_mul_pd(a, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

SHADOWRANK_AVX2 void scale(double alpha, const double* x, double* out, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = alpha * x[i];
}

SHADOWRANK_AVX2 double gather_dot(const double* values, const std::int32_t* index,
                                  const double* weights, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + j));
    const __m256d v = _mm256_i32gather_pd(values, idx, 8);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, _mm256_loadu_pd(weights + j)));
  }
  double sum = horizontal_sum(acc);
  for (; j < n; ++j) sum += values[index[j]] * weights[j];
  return sum;
}

SHADOWRANK_AVX2 double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double sum = horizontal_sum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

SHADOWRANK_AVX2 bool monge_rows(const double* upper, const double* lower, std::size_t n,
                                double tol) {
  if (n < 2) return true;
  const std::size_t pairs = n - 1;
  const __m256d neg_tol = _mm256_set1_pd(-tol);
  std::size_t j = 0;
  for (; j + kLanes <= pairs; j += kLanes) {
    const __m256d diag = _mm256_add_pd(_mm256_loadu_pd(upper + j), _mm256_loadu_pd(lower + j + 1));
    const __m256d anti = _mm256_add_pd(_mm256_loadu_pd(upper + j + 1), _mm256_loadu_pd(lower + j));
    const __m256d bad = _mm256_cmp_pd(_mm256_sub_pd(diag, anti), neg_tol, _CMP_LT_OQ);
    if (_mm256_movemask_pd(bad) != 0) return false;
  }
  for (; j < pairs; ++j) {
    const double diag = upper[j] + lower[j + 1];
    const double anti = upper[j + 1] + lower[j];
    if (diag - anti < -tol) return false;
  }
  return true;
}

SHADOWRANK_AVX2 RelaxResult hungarian_relax(const double* cost, double row_potential,
                                            const double* col_potential, double* min_slack,
                                            std::int32_t* way, const std::uint64_t* used,
                                            std::int32_t from, std::size_t n) {
  const __m256d pot = _mm256_set1_pd(row_potential);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m128i from4 = _mm_set1_epi32(from);
  const __m256i low_dwords = _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6);
  const __m256d step = _mm256_set1_pd(static_cast<double>(kLanes));

  __m256d best = inf;
  __m256d best_idx = _mm256_set1_pd(-1.0);
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);

  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d is_used =
        _mm256_castsi256_pd(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(used + j)));
    const __m256d cur =
        _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(cost + j), pot), _mm256_loadu_pd(col_potential + j));
    __m256d slack = _mm256_loadu_pd(min_slack + j);
    const __m256d update = _mm256_andnot_pd(is_used, _mm256_cmp_pd(cur, slack, _CMP_LT_OQ));
    slack = _mm256_blendv_pd(slack, cur, update);
    _mm256_storeu_pd(min_slack + j, slack);

    const __m128i mask32 = _mm256_castsi256_si128(
        _mm256_permutevar8x32_epi32(_mm256_castpd_si256(update), low_dwords));
    __m128i* way_ptr = reinterpret_cast<__m128i*>(way + j);
    _mm_storeu_si128(way_ptr, _mm_blendv_epi8(_mm_loadu_si128(way_ptr), from4, mask32));

    const __m256d candidate = _mm256_blendv_pd(slack, inf, is_used);
    const __m256d better = _mm256_cmp_pd(candidate, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, candidate, better);
    best_idx = _mm256_blendv_pd(best_idx, idx, better);
    idx = _mm256_add_pd(idx, step);
  }

  alignas(32) double lane_best[kLanes];
  alignas(32) double lane_idx[kLanes];
  _mm256_store_pd(lane_best, best);
  _mm256_store_pd(lane_idx, best_idx);

  RelaxResult result;
  for (std::size_t lane = 0; lane < kLanes; ++lane) {
    if (lane_idx[lane] < 0.0) continue;
    const auto column = static_cast<std::size_t>(lane_idx[lane]);
    if (lane_best[lane] < result.delta ||
        (lane_best[lane] == result.delta && column < result.column)) {
      result.delta = lane_best[lane];
      result.column = column;
    }
  }
  for (; j < n; ++j) {
    if (used[j] != 0) continue;
    const double cur = (cost[j] - row_potential) - col_potential[j];
    if (cur < min_slack[j]) {
      min_slack[j] = cur;
      way[j] = from;
    }
    if (min_slack[j] < result.delta) {
      result.delta = min_slack[j];
      result.column = j;
    }
  }
  return result;
}

}  // namespace shadowrank::kernels::avx2

#endif
