#pragma once

// Problem data model: a single user's ranking instance, its side
// constraints, and the adjusted-score construction shared by every solver.
//
// Under fixed discounting the utility matrix is u * gamma^T and every
// constraint matrix is a_k * gamma^T, so only the factors are stored. An
// instance may instead carry dense per-cell matrices for structures that do
// not factor.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shadowrank/types.hpp"

namespace shadowrank {

enum class Sense { kGreaterEqual, kLessEqual };
enum class BoundKind { kAbsolute, kFractionOfTotalExposure };

/// Positive, non-increasing exposure weights, one per rank position.
class DiscountVector {
 public:
  DiscountVector() = default;
  explicit DiscountVector(std::vector<double> weights);

  /// gamma_j = 1 / log2(j + 1) for ranks j = 1..ranks.
  static DiscountVector dcg(std::size_t ranks);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t j) const { return weights_[j]; }
  std::span<const double> values() const { return weights_; }
  double total() const { return total_; }

  friend bool operator==(const DiscountVector& a, const DiscountVector& b) {
    return a.weights_ == b.weights_;
  }

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

struct ConstraintSpec {
  std::vector<double> weights;  // per-item auxiliary utility a_k, length m1
  Sense sense = Sense::kGreaterEqual;
  double bound = 0.0;
  BoundKind bound_kind = BoundKind::kAbsolute;
  std::string label;
  std::optional<Matrix> dense;  // per-cell A_k (m1 x m2); dense instances only

  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

class RankingInstance {
 public:
  RankingInstance() = default;

  /// Fixed-discounting instance. Throws DataError on any invariant violation.
  RankingInstance(std::string user_id, std::vector<double> utility, DiscountVector gamma,
                  std::vector<ConstraintSpec> constraints, std::vector<double> covariates);

  /// Dense instance: utility and every constraint carry an m1 x m2 matrix.
  static RankingInstance dense(std::string user_id, Matrix utility, DiscountVector gamma,
                               std::vector<ConstraintSpec> constraints,
                               std::vector<double> covariates);

  const std::string& user_id() const { return user_id_; }
  std::span<const double> utility() const { return utility_; }
  const DiscountVector& gamma() const { return gamma_; }
  const std::vector<ConstraintSpec>& constraints() const { return constraints_; }
  std::span<const double> covariates() const { return covariates_; }
  const std::optional<Matrix>& dense_utility() const { return dense_utility_; }

  bool is_dense() const { return dense_utility_.has_value(); }
  std::size_t items() const { return items_; }
  std::size_t ranks() const { return gamma_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }

  /// Utility of placing `item` at `rank`.
  double utility_at(std::size_t item, std::size_t rank) const;
  /// Auxiliary utility of constraint k for `item` at `rank`.
  double constraint_at(std::size_t k, std::size_t item, std::size_t rank) const;

  friend bool operator==(const RankingInstance&, const RankingInstance&) = default;

 private:
  void validate() const;

  std::string user_id_;
  std::vector<double> utility_;
  DiscountVector gamma_;
  std::vector<ConstraintSpec> constraints_;
  std::vector<double> covariates_;
  std::optional<Matrix> dense_utility_;
  std::size_t items_ = 0;
};

/// Rank -> item map. Potentials, when present, certify optimality: for every
/// pair row_potentials[i] + col_potentials[j] >= weight(i, j), with equality on
/// assigned pairs.
struct Assignment {
  std::vector<std::int32_t> item_at_rank;
  double total_weight = 0.0;
  std::optional<std::vector<double>> row_potentials;
  std::optional<std::vector<double>> col_potentials;
};

struct ShadowPriceVector {
  std::vector<double> lambda;
  double dual_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool infeasible_flag = false;
};

/// Every constraint becomes (GE, ABSOLUTE). Fraction bounds are scaled by the
/// total exposure and LE rows are negated. Idempotent.
RankingInstance normalize_constraints(const RankingInstance& instance);
bool is_canonical(const RankingInstance& instance);

/// s = u + sum_k (1 + epsilon) lambda_k a_k. Fixed-discounting instances only.
std::vector<double> score_vector(const RankingInstance& instance, std::span<const double> lambda,
                                 double epsilon);

inline constexpr std::size_t kDefaultMaterializeCap = std::size_t{1} << 26;

/// S = U + sum_k (1 + epsilon) lambda_k A_k as a dense m1 x m2 matrix.
/// Throws SizeLimitError when m1 * m2 exceeds max_cells.
Matrix materialize_weight_matrix(const RankingInstance& instance, std::span<const double> lambda,
                                 double epsilon, std::size_t max_cells = kDefaultMaterializeCap);

/// tr(U^T P) for the assignment's permutation.
double raw_utility(const RankingInstance& instance, const Assignment& assignment);
/// tr(A_k^T P).
double constraint_value(const RankingInstance& instance, std::size_t k,
                        const Assignment& assignment);
}  // namespace shadowrank
