#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "shadowrank/assignment.hpp"
#include "shadowrank/kernels.hpp"

namespace shadowrank {

// Ranks play the role of rows (the smaller side) so every rank is matched and
// surplus items stay free. Costs are negated weights; index 0 of the column
// arrays is the sentinel of the classic formulation.
Assignment hungarian_assign(const Matrix& weights) {
  const std::size_t items = weights.rows();
  const std::size_t ranks = weights.cols();
  if (ranks == 0) return {};
  if (items < ranks) throw DataError("hungarian_assign: fewer items than ranks");
  if (!weights.all_finite()) throw DataError("hungarian_assign: non-finite weight");
  if (items > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw SizeLimitError("hungarian_assign: too many items");

  Matrix cost(ranks, items);
  for (std::size_t i = 0; i < items; ++i)
    for (std::size_t j = 0; j < ranks; ++j) cost(j, i) = -weights(i, j);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::uint64_t kUsed = ~std::uint64_t{0};
  const std::size_t cols = items + 1;

  std::vector<double> row_pot(ranks + 1, 0.0);
  std::vector<double> col_pot(cols, 0.0);
  std::vector<std::int32_t> match(cols, 0);  // column -> 1-based row
  std::vector<std::int32_t> way(cols, 0);
  std::vector<double> min_slack(cols);
  std::vector<std::uint64_t> used(cols);

  const auto& table = kernels::active();
  for (std::size_t row = 1; row <= ranks; ++row) {
    match[0] = static_cast<std::int32_t>(row);
    std::size_t col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = kUsed;
      const auto row0 = static_cast<std::size_t>(match[col0]);
      const kernels::RelaxResult step = table.hungarian_relax(
          cost.row(row0 - 1).data(), row_pot[row0], col_pot.data() + 1, min_slack.data() + 1,
          way.data() + 1, used.data() + 1, static_cast<std::int32_t>(col0), items);
      const double delta = step.delta;
      const std::size_t col1 = step.column + 1;
      for (std::size_t c = 0; c < cols; ++c) {
        if (used[c] != 0) {
          row_pot[static_cast<std::size_t>(match[c])] += delta;
          col_pot[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const auto col1 = static_cast<std::size_t>(way[col0]);
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  Assignment out;
  out.item_at_rank.assign(ranks, -1);
  for (std::size_t c = 1; c < cols; ++c) {
    if (match[c] != 0) out.item_at_rank[static_cast<std::size_t>(match[c]) - 1] = static_cast<std::int32_t>(c - 1);
  }
  out.total_weight = assignment_weight(weights, out);

  std::vector<double> item_pot(items);
  for (std::size_t i = 0; i < items; ++i) item_pot[i] = -col_pot[i + 1];
  std::vector<double> rank_pot(ranks);
  for (std::size_t j = 0; j < ranks; ++j) rank_pot[j] = -row_pot[j + 1];
  out.row_potentials = std::move(item_pot);
  out.col_potentials = std::move(rank_pot);
  return out;
}

}  // namespace shadowrank
