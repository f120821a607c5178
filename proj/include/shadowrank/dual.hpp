#pragma once

// Lagrangian dual of the constrained ranking program:
//
//   g(lambda) = max_P tr((U + sum_k lambda_k A_k)^T P) - lambda^T b,  lambda >= 0
//
// minimized over the K shadow prices with projected subgradient steps and an
// exact piecewise-linear line search per coordinate. The inner maximum is
// an assignment problem, solved by the sort path under fixed discounting.

#include <functional>
#include <span>
#include <vector>

#include "shadowrank/assignment.hpp"
#include "shadowrank/model.hpp"

namespace shadowrank {

enum class StepSchedule { kHarmonic, kPolyakEstimate };

/// {0} plus i * 10^-j for i in 1..9, j in 1..4, ascending.
std::vector<double> default_epsilon_grid();

struct DualConfig {
  int max_iterations = 5000;
  StepSchedule step_schedule = StepSchedule::kHarmonic;
  // Harmonic step numerator c in c / t; 0 selects max(max_k |b_k|, 1).
  double step_scale = 0.0;
  // Relative improvement of the best dual value below which an iteration
  // counts as stalled; `patience` stalled iterations in a row stop the run.
  double tolerance = 1e-6;
  int patience = 50;
  double lambda_cap = 1e6;
  // Coordinate line-search sweeps after the subgradient phase.
  int polish_rounds = 8;
  double compliance_tolerance = kDefaultTolerance;
  std::vector<double> epsilon_grid = default_epsilon_grid();
  AssignOptions assign_options;
  // Called with every lambda the solver evaluates and its dual value.
  std::function<void(std::span<const double>, double)> observer;

  void validate() const;
};

/// tr(A_k^T P) - b_k per canonical constraint; compliant when every slack is
/// at least -tolerance. `utility` is the raw tr(U^T P).
struct ComplianceReport {
  std::vector<double> slack;
  bool compliant = true;
  double utility = 0.0;
};

ComplianceReport evaluate_compliance(const RankingInstance& canonical, const Assignment& assignment,
                                     double tolerance = kDefaultTolerance);

struct DualEvaluation {
  double value = 0.0;
  Assignment inner;                      // maximizer of the penalized inner problem
  std::vector<double> constraint_values; // tr(A_k^T P_inner)
};

DualEvaluation dual_value(const RankingInstance& canonical, std::span<const double> lambda,
                          const AssignOptions& options = {});

/// (tr(A_k^T P_inner) - b_k)_k, a subgradient of g at the evaluated lambda.
std::vector<double> subgradient(const RankingInstance& canonical, const DualEvaluation& eval);

ShadowPriceVector solve_dual(const RankingInstance& canonical, const DualConfig& config = {});

struct RankResult {
  Assignment assignment;
  ComplianceReport compliance;
};

/// Maximizer of tr(S^T P) for S = U + sum_k (1 + epsilon) lambda_k A_k: the
/// sort path for fixed discounting, AUTO dispatch for dense instances.
Assignment adjusted_assignment(const RankingInstance& canonical, std::span<const double> lambda,
                               double epsilon, const AssignOptions& options = {});

/// Ranks with S = U + sum_k (1 + epsilon) lambda_k A_k and scores the result
/// against the canonical constraints and the raw utility.
RankResult rank_with_lambda(const RankingInstance& canonical, std::span<const double> lambda,
                            double epsilon, const AssignOptions& options = {},
                            double tolerance = kDefaultTolerance);

/// Grid value with the fewest non-compliant instances; ties prefer higher
/// mean raw utility, then smaller epsilon.
double tune_epsilon(std::span<const RankingInstance> instances,
                    std::span<const std::vector<double>> lambdas, const DualConfig& config);

}  // namespace shadowrank
