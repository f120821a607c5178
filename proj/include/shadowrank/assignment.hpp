#pragma once

// Maximum-weight rank assignment. Weight matrices are items x ranks
// (m1 x m2, m1 >= m2); every rank receives exactly one item and every item
// is used at most once.

#include <span>
#include <string_view>
#include <vector>

#include "shadowrank/model.hpp"
#include "shadowrank/types.hpp"

namespace shadowrank {

enum class AssignStrategy { kSortMonge, kHungarian, kGreedyHalf, kBruteForce, kAuto };

std::string_view strategy_name(AssignStrategy strategy);

inline constexpr std::size_t kBruteForceMaxItems = 8;

struct AssignOptions {
  // AUTO falls back from Hungarian to greedy above this many items.
  std::size_t greedy_threshold = 4096;
  double monge_tolerance = kDefaultTolerance;
};

/// Shortest-augmenting-path Hungarian method on the rectangular matrix,
/// O(m1 * m2^2). Returns dual potentials alongside the assignment.
Assignment hungarian_assign(const Matrix& weights);

/// Heaviest free cell first; ties go to the lowest item, then lowest rank.
/// At least half the optimum for nonnegative weights.
Assignment greedy_assign(const Matrix& weights);

/// Optimal assignment for S = s * gamma^T: rank j gets the item with the
/// j-th largest score (equal scores keep ascending item order).
Assignment sorted_identity_assign(std::span<const double> scores, const DiscountVector& gamma);

/// Adjacent 2x2 check of S[i][j] + S[i+1][j+1] >= S[i][j+1] + S[i+1][j] - tol.
bool is_inverse_monge(const Matrix& weights, double tol = kDefaultTolerance);

/// tr(C^T P) >= bound.
struct LinearConstraint {
  Matrix coefficients;
  double bound = 0.0;
};

/// Canonical constraints of an instance as dense coefficient matrices.
std::vector<LinearConstraint> linear_constraints(const RankingInstance& canonical);

/// Exhaustive search over injective rank -> item maps (m1 <= 8).
Assignment brute_force_assign(const Matrix& weights);
/// Best map among those satisfying every constraint within tol. Throws
/// InfeasibleError when no map complies.
Assignment brute_force_assign(const Matrix& weights, std::span<const LinearConstraint> constraints,
                              double tol = kDefaultTolerance);

/// Strategy AUTO would pick for a dense matrix.
AssignStrategy resolve_strategy(const Matrix& weights, const AssignOptions& options = {});

struct DispatchResult {
  Assignment assignment;
  AssignStrategy used = AssignStrategy::kAuto;
};

DispatchResult assign(const Matrix& weights, AssignStrategy strategy,
                      const AssignOptions& options = {});
/// Factored input S = s * gamma^T. AUTO always takes the sort path.
DispatchResult assign(std::span<const double> scores, const DiscountVector& gamma,
                      AssignStrategy strategy, const AssignOptions& options = {});

/// Distinct items in range and one item per rank.
bool is_valid_assignment(const Assignment& assignment, std::size_t items, std::size_t ranks);

/// Sum of weights on the assigned cells.
double assignment_weight(const Matrix& weights, const Assignment& assignment);

}  // namespace shadowrank
