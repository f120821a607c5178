#include "shadowrank/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "shadowrank/kernels.hpp"

namespace shadowrank {

std::string_view strategy_name(AssignStrategy strategy) {
  switch (strategy) {
    case AssignStrategy::kSortMonge:
      return "sort_monge";
    case AssignStrategy::kHungarian:
      return "hungarian";
    case AssignStrategy::kGreedyHalf:
      return "greedy_half";
    case AssignStrategy::kBruteForce:
      return "brute_force";
    case AssignStrategy::kAuto:
      return "auto";
  }
  return "unknown";
}

double assignment_weight(const Matrix& weights, const Assignment& assignment) {
  double total = 0.0;
  for (std::size_t j = 0; j < assignment.item_at_rank.size(); ++j)
    total += weights(static_cast<std::size_t>(assignment.item_at_rank[j]), j);
  return total;
}

bool is_valid_assignment(const Assignment& assignment, std::size_t items, std::size_t ranks) {
  if (assignment.item_at_rank.size() != ranks) return false;
  std::vector<bool> seen(items, false);
  for (const std::int32_t item : assignment.item_at_rank) {
    if (item < 0 || static_cast<std::size_t>(item) >= items) return false;
    if (seen[static_cast<std::size_t>(item)]) return false;
    seen[static_cast<std::size_t>(item)] = true;
  }
  return true;
}

namespace {

void require_shape(const Matrix& weights, std::string_view who) {
  if (weights.rows() < weights.cols())
    throw DataError(std::string(who) + ": fewer items than ranks");
  if (!weights.all_finite()) throw DataError(std::string(who) + ": non-finite weight");
}

}  // namespace

Assignment greedy_assign(const Matrix& weights) {
  require_shape(weights, "greedy_assign");
  const std::size_t items = weights.rows();
  const std::size_t ranks = weights.cols();

  std::vector<std::size_t> cells(items * ranks);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  const auto values = weights.values();
  // Row-major cell index order is (row, col) order, so it doubles as the tie-break.
  std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });

  Assignment out;
  out.item_at_rank.assign(ranks, -1);
  std::vector<bool> item_taken(items, false);
  std::size_t filled = 0;
  for (const std::size_t cell : cells) {
    if (filled == ranks) break;
    const std::size_t item = cell / ranks;
    const std::size_t rank = cell % ranks;
    if (item_taken[item] || out.item_at_rank[rank] >= 0) continue;
    item_taken[item] = true;
    out.item_at_rank[rank] = static_cast<std::int32_t>(item);
    out.total_weight += values[cell];
    ++filled;
  }
  return out;
}

Assignment sorted_identity_assign(std::span<const double> scores, const DiscountVector& gamma) {
  const std::size_t ranks = gamma.size();
  if (scores.size() < ranks) throw DataError("sorted_identity_assign: fewer items than ranks");
  if (!std::all_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); }))
    throw DataError("sorted_identity_assign: non-finite score");

  std::vector<std::int32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ranks), order.end(),
                    [&](std::int32_t a, std::int32_t b) {
                      const double sa = scores[static_cast<std::size_t>(a)];
                      const double sb = scores[static_cast<std::size_t>(b)];
                      if (sa != sb) return sa > sb;
                      return a < b;
                    });
  order.resize(ranks);

  Assignment out;
  out.total_weight =
      kernels::active().gather_dot(scores.data(), order.data(), gamma.values().data(), ranks);
  out.item_at_rank = std::move(order);
  return out;
}

bool is_inverse_monge(const Matrix& weights, double tol) {
  const auto& table = kernels::active();
  for (std::size_t i = 0; i + 1 < weights.rows(); ++i) {
    if (!table.monge_rows(weights.row(i).data(), weights.row(i + 1).data(), weights.cols(), tol))
      return false;
  }
  return true;
}

std::vector<LinearConstraint> linear_constraints(const RankingInstance& canonical) {
  if (!is_canonical(canonical)) throw DataError("linear_constraints: instance is not canonical");
  std::vector<LinearConstraint> out;
  out.reserve(canonical.num_constraints());
  for (std::size_t k = 0; k < canonical.num_constraints(); ++k) {
    const auto& c = canonical.constraints()[k];
    LinearConstraint row{Matrix(canonical.items(), canonical.ranks()), c.bound};
    for (std::size_t i = 0; i < canonical.items(); ++i)
      for (std::size_t j = 0; j < canonical.ranks(); ++j) row.coefficients(i, j) = canonical.constraint_at(k, i, j);
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

// Visits every injective rank -> item map; `visit` returns nothing.
template <typename Visit>
void for_each_injection(std::size_t items, std::size_t ranks, Visit&& visit) {
  std::vector<std::int32_t> perm(items);
  std::iota(perm.begin(), perm.end(), 0);
  // Permutations sharing a prefix of length `ranks` are consecutive; skip the
  // duplicates by reversing the tail, which jumps to the next distinct prefix.
  do {
    visit(std::span<const std::int32_t>(perm.data(), ranks));
    std::reverse(perm.begin() + static_cast<std::ptrdiff_t>(ranks), perm.end());
  } while (std::next_permutation(perm.begin(), perm.end()));
}

Assignment brute_force_impl(const Matrix& weights, std::span<const LinearConstraint> constraints,
                            double tol) {
  require_shape(weights, "brute_force_assign");
  const std::size_t items = weights.rows();
  const std::size_t ranks = weights.cols();
  if (items > kBruteForceMaxItems)
    throw SizeLimitError("brute_force_assign: at most " + std::to_string(kBruteForceMaxItems) +
                         " items");
  for (const auto& c : constraints) {
    if (c.coefficients.rows() != items || c.coefficients.cols() != ranks)
      throw DataError("brute_force_assign: constraint shape mismatch");
  }

  Assignment best;
  bool found = false;
  for_each_injection(items, ranks, [&](std::span<const std::int32_t> map) {
    for (const auto& c : constraints) {
      double value = 0.0;
      for (std::size_t j = 0; j < ranks; ++j) value += c.coefficients(static_cast<std::size_t>(map[j]), j);
      if (value < c.bound - tol) return;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < ranks; ++j) total += weights(static_cast<std::size_t>(map[j]), j);
    if (!found || total > best.total_weight) {
      best.item_at_rank.assign(map.begin(), map.end());
      best.total_weight = total;
      found = true;
    }
  });
  if (!found) throw InfeasibleError("brute_force_assign: no assignment satisfies the constraints");
  return best;
}

}  // namespace

Assignment brute_force_assign(const Matrix& weights) { return brute_force_impl(weights, {}, 0.0); }

Assignment brute_force_assign(const Matrix& weights, std::span<const LinearConstraint> constraints,
                              double tol) {
  return brute_force_impl(weights, constraints, tol);
}

namespace {

// Rows ordered by descending first column, ties by index.
std::vector<std::size_t> rows_by_first_column(const Matrix& weights) {
  std::vector<std::size_t> order(weights.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights(a, 0) > weights(b, 0); });
  return order;
}

Matrix permute_rows(const Matrix& weights, std::span<const std::size_t> order) {
  Matrix out(weights.rows(), weights.cols());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto src = weights.row(order[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// Identity on the sorted rows is optimal only when the matrix is square.
bool sorted_monge(const Matrix& weights, double tol, std::vector<std::size_t>* order_out) {
  if (weights.rows() != weights.cols() || weights.rows() == 0) return false;
  auto order = rows_by_first_column(weights);
  if (!is_inverse_monge(permute_rows(weights, order), tol)) return false;
  if (order_out) *order_out = std::move(order);
  return true;
}

Assignment sorted_monge_assign(const Matrix& weights, const std::vector<std::size_t>& order) {
  Assignment out;
  out.item_at_rank.resize(weights.cols());
  for (std::size_t j = 0; j < weights.cols(); ++j) out.item_at_rank[j] = static_cast<std::int32_t>(order[j]);
  out.total_weight = assignment_weight(weights, out);
  return out;
}

}  // namespace

AssignStrategy resolve_strategy(const Matrix& weights, const AssignOptions& options) {
  if (sorted_monge(weights, options.monge_tolerance, nullptr)) return AssignStrategy::kSortMonge;
  return weights.rows() > options.greedy_threshold ? AssignStrategy::kGreedyHalf
                                                   : AssignStrategy::kHungarian;
}

DispatchResult assign(const Matrix& weights, AssignStrategy strategy, const AssignOptions& options) {
  require_shape(weights, "assign");
  switch (strategy) {
    case AssignStrategy::kSortMonge: {
      std::vector<std::size_t> order;
      if (!sorted_monge(weights, options.monge_tolerance, &order))
        throw DataError("assign: matrix is not square inverse Monge after row sorting");
      return {sorted_monge_assign(weights, order), strategy};
    }
    case AssignStrategy::kHungarian:
      return {hungarian_assign(weights), strategy};
    case AssignStrategy::kGreedyHalf:
      return {greedy_assign(weights), strategy};
    case AssignStrategy::kBruteForce:
      return {brute_force_assign(weights), strategy};
    case AssignStrategy::kAuto: {
      std::vector<std::size_t> order;
      if (sorted_monge(weights, options.monge_tolerance, &order))
        return {sorted_monge_assign(weights, order), AssignStrategy::kSortMonge};
      if (weights.rows() > options.greedy_threshold)
        return {greedy_assign(weights), AssignStrategy::kGreedyHalf};
      return {hungarian_assign(weights), AssignStrategy::kHungarian};
    }
  }
  throw DataError("assign: unknown strategy");
}

DispatchResult assign(std::span<const double> scores, const DiscountVector& gamma,
                      AssignStrategy strategy, const AssignOptions& options) {
  if (strategy == AssignStrategy::kAuto || strategy == AssignStrategy::kSortMonge)
    return {sorted_identity_assign(scores, gamma), AssignStrategy::kSortMonge};
  Matrix weights(scores.size(), gamma.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    kernels::active().scale(scores[i], gamma.values().data(), weights.row(i).data(), gamma.size());
  return assign(weights, strategy, options);
}

}  // namespace shadowrank
