#include "shadowrank/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace shadowrank {

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid{0.0};
  for (int j = 1; j <= 4; ++j) {
    const double unit = std::pow(10.0, -j);
    for (int i = 1; i <= 9; ++i) grid.push_back(i * unit);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

void DualConfig::validate() const {
  if (!(lambda_cap > 0.0)) throw DataError("lambda_cap must be > 0");
  if (epsilon_grid.empty()) throw DataError("epsilon grid must be nonempty");
  if (std::any_of(epsilon_grid.begin(), epsilon_grid.end(), [](double e) { return !(e >= 0.0); }))
    throw DataError("epsilon grid values must be >= 0");
  if (max_iterations < 1) throw DataError("max_iterations must be >= 1");
  if (patience < 1) throw DataError("patience must be >= 1");
}

namespace {

void require_canonical(const RankingInstance& instance, std::string_view who) {
  if (!is_canonical(instance))
    throw DataError(std::string(who) + ": instance must be canonical (GE, absolute bounds)");
}

void require_lambda(const RankingInstance& instance, std::span<const double> lambda) {
  if (lambda.size() != instance.num_constraints()) throw DataError("lambda length != constraint count");
  if (std::any_of(lambda.begin(), lambda.end(), [](double l) { return !(l >= 0.0) || !std::isfinite(l); }))
    throw DataError("lambda must be finite and >= 0");
}

Assignment inner_assign(const RankingInstance& instance, std::span<const double> lambda, double epsilon,
                        const AssignOptions& options) {
  if (!instance.is_dense()) {
    const std::vector<double> s = score_vector(instance, lambda, epsilon);
    return sorted_identity_assign(s, instance.gamma());
  }
  const Matrix weights = materialize_weight_matrix(instance, lambda, epsilon);
  return assign(weights, AssignStrategy::kAuto, options).assignment;
}

double bound_dot(const RankingInstance& instance, std::span<const double> lambda) {
  double total = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) total += lambda[k] * instance.constraints()[k].bound;
  return total;
}

}  // namespace

ComplianceReport evaluate_compliance(const RankingInstance& canonical, const Assignment& assignment,
                                     double tolerance) {
  require_canonical(canonical, "evaluate_compliance");
  ComplianceReport report;
  report.slack.resize(canonical.num_constraints());
  for (std::size_t k = 0; k < canonical.num_constraints(); ++k) {
    report.slack[k] = constraint_value(canonical, k, assignment) - canonical.constraints()[k].bound;
    if (report.slack[k] < -tolerance) report.compliant = false;
  }
  report.utility = raw_utility(canonical, assignment);
  return report;
}

DualEvaluation dual_value(const RankingInstance& canonical, std::span<const double> lambda,
                          const AssignOptions& options) {
  require_canonical(canonical, "dual_value");
  require_lambda(canonical, lambda);
  DualEvaluation eval;
  eval.inner = inner_assign(canonical, lambda, 0.0, options);
  eval.value = eval.inner.total_weight - bound_dot(canonical, lambda);
  eval.constraint_values.resize(canonical.num_constraints());
  for (std::size_t k = 0; k < canonical.num_constraints(); ++k)
    eval.constraint_values[k] = constraint_value(canonical, k, eval.inner);
  return eval;
}

std::vector<double> subgradient(const RankingInstance& canonical, const DualEvaluation& eval) {
  std::vector<double> g(canonical.num_constraints());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = eval.constraint_values[k] - canonical.constraints()[k].bound;
  return g;
}

namespace {

// Projected KKT conditions for min g over lambda >= 0 with subgradient `grad`.
bool is_stationary(std::span<const double> lambda, std::span<const double> grad, double tol) {
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (grad[k] < -tol) return false;
    if (lambda[k] > 0.0 && grad[k] > tol) return false;
  }
  return true;
}

struct Probe {
  double t = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

class DualSearch {
 public:
  DualSearch(const RankingInstance& instance, const DualConfig& config)
      : instance_(instance), config_(config) {}

  DualEvaluation evaluate(std::span<const double> lambda) {
    ++evaluations_;
    DualEvaluation e = dual_value(instance_, lambda, config_.assign_options);
    if (config_.observer) config_.observer(lambda, e.value);
    return e;
  }

  int evaluations() const { return evaluations_; }

  // Exact minimization of g along coordinate k from `lambda`. The function is
  // convex and piecewise linear in that coordinate, so intersecting the
  // supporting lines of a bracket converges in finitely many probes.
  // Returns true when the minimum along the coordinate is certified.
  bool line_search(std::vector<double>& lambda, double& value, std::size_t k) {
    std::vector<double> trial = lambda;
    Probe best{lambda[k], value, 0.0};
    auto probe = [&](double t) {
      trial[k] = t;
      const DualEvaluation e = evaluate(trial);
      const Probe p{t, e.value, e.constraint_values[k] - instance_.constraints()[k].bound};
      if (p.value < best.value) best = p;
      return p;
    };
    auto finish = [&](bool certified) {
      if (best.value < value) {
        lambda[k] = best.t;
        value = best.value;
      }
      return certified;
    };

    const Probe start = probe(lambda[k]);
    if (start.slope == 0.0) return finish(true);

    Probe lo;
    Probe hi;
    if (start.slope > 0.0) {
      if (start.t == 0.0) return finish(true);
      hi = start;
      lo = probe(0.0);
      if (lo.slope >= 0.0) return finish(true);
    } else {
      lo = start;
      double stride = std::max(1.0, start.t);
      for (;;) {
        const double t = std::min(lo.t + stride, config_.lambda_cap);
        const Probe p = probe(t);
        if (p.slope >= 0.0) {
          if (p.slope == 0.0) return finish(true);
          hi = p;
          break;
        }
        if (t >= config_.lambda_cap) return finish(true);
        lo = p;
        stride *= 2.0;
      }
    }

    constexpr int kMaxProbes = 100;
    for (int it = 0; it < kMaxProbes; ++it) {
      const double denom = lo.slope - hi.slope;
      double t = (hi.value - lo.value + lo.slope * lo.t - hi.slope * hi.t) / denom;
      t = std::clamp(t, lo.t, hi.t);
      const double model = lo.value + lo.slope * (t - lo.t);
      const Probe p = probe(t);
      const double tol = 1e-9 * std::max(1.0, std::abs(model));
      if (p.value <= model + tol || p.slope == 0.0) return finish(true);
      if (p.slope < 0.0) {
        if (t == lo.t) break;
        lo = p;
      } else {
        if (t == hi.t) break;
        hi = p;
      }
    }
    return finish(false);
  }

 private:
  const RankingInstance& instance_;
  const DualConfig& config_;
  int evaluations_ = 0;
};

}  // namespace

ShadowPriceVector solve_dual(const RankingInstance& canonical, const DualConfig& config) {
  config.validate();
  require_canonical(canonical, "solve_dual");
  const std::size_t K = canonical.num_constraints();
  const double cap = config.lambda_cap;
  const double kkt_tol = config.compliance_tolerance;

  DualSearch search(canonical, config);
  ShadowPriceVector out;
  std::vector<double> lambda(K, 0.0);
  DualEvaluation eval = search.evaluate(lambda);
  std::vector<double> grad = subgradient(canonical, eval);

  auto finish = [&](std::vector<double> best_lambda, double best_value, bool converged) {
    out.lambda = std::move(best_lambda);
    out.dual_value = best_value;
    out.converged = converged;
    out.iterations = search.evaluations();
    out.infeasible_flag =
        std::any_of(out.lambda.begin(), out.lambda.end(), [&](double l) { return l >= cap; });
    return out;
  };

  if (K == 0 || is_stationary(lambda, grad, kkt_tol)) return finish(lambda, eval.value, true);

  double scale = config.step_scale;
  if (scale <= 0.0) {
    scale = 1.0;
    for (const auto& c : canonical.constraints()) scale = std::max(scale, std::abs(c.bound));
  }

  std::vector<double> best_lambda = lambda;
  double best_value = eval.value;
  double primal_bound = -std::numeric_limits<double>::infinity();
  auto note_primal = [&](const DualEvaluation& e) {
    for (std::size_t k = 0; k < K; ++k)
      if (e.constraint_values[k] - canonical.constraints()[k].bound < -kkt_tol) return;
    primal_bound = std::max(primal_bound, raw_utility(canonical, e.inner));
  };
  note_primal(eval);

  // Step expansion: a coordinate pushed upward for kExpandWindow consecutive
  // steps doubles the step scale; a sign change halves it back toward 1.
  constexpr int kExpandWindow = 10;
  double boost = 1.0;
  std::vector<int> upward_run(K, 0);
  std::vector<double> previous_grad = grad;

  bool converged = false;
  bool diverged = false;
  int stalled = 0;
  for (int t = 1; t < config.max_iterations; ++t) {
    const double norm2 = std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0);
    if (norm2 == 0.0) {
      converged = true;
      break;
    }
    double step = scale * boost / (t * std::sqrt(norm2));
    if (config.step_schedule == StepSchedule::kPolyakEstimate && std::isfinite(primal_bound)) {
      const double gap = eval.value - primal_bound;
      if (gap > 0.0) step = gap / norm2;
    }
    for (std::size_t k = 0; k < K; ++k) lambda[k] = std::clamp(lambda[k] - step * grad[k], 0.0, cap);

    eval = search.evaluate(lambda);
    grad = subgradient(canonical, eval);
    note_primal(eval);

    const double threshold = config.tolerance * std::max(1.0, std::abs(best_value));
    stalled = eval.value < best_value - threshold ? 0 : stalled + 1;
    if (eval.value < best_value) {
      best_value = eval.value;
      best_lambda = lambda;
    }
    if (is_stationary(lambda, grad, kkt_tol)) {
      best_value = eval.value;
      best_lambda = lambda;
      converged = true;
      break;
    }

    bool flipped = false;
    for (std::size_t k = 0; k < K; ++k) {
      upward_run[k] = grad[k] < 0.0 ? upward_run[k] + 1 : 0;
      if ((grad[k] < 0.0) != (previous_grad[k] < 0.0)) flipped = true;
    }
    previous_grad = grad;
    if (flipped) boost = std::max(1.0, boost / 2.0);
    if (std::any_of(upward_run.begin(), upward_run.end(), [](int r) { return r >= kExpandWindow; })) {
      boost *= 2.0;
      std::fill(upward_run.begin(), upward_run.end(), 0);
    }

    for (std::size_t k = 0; k < K; ++k)
      if (lambda[k] >= cap && grad[k] < 0.0) diverged = true;
    if (diverged) break;
    if (stalled >= config.patience) {
      converged = true;
      break;
    }
  }

  if (diverged) return finish(lambda, eval.value, false);

  bool certified = false;
  for (int round = 0; round < config.polish_rounds; ++round) {
    const double before = best_value;
    certified = true;
    for (std::size_t k = 0; k < K; ++k) certified = search.line_search(best_lambda, best_value, k) && certified;
    if (best_value >= before) break;
  }
  if (K == 1 && certified) converged = true;
  return finish(std::move(best_lambda), best_value, converged);
}

Assignment adjusted_assignment(const RankingInstance& canonical, std::span<const double> lambda,
                               double epsilon, const AssignOptions& options) {
  require_canonical(canonical, "adjusted_assignment");
  require_lambda(canonical, lambda);
  if (!(epsilon >= 0.0)) throw DataError("epsilon must be >= 0");
  return inner_assign(canonical, lambda, epsilon, options);
}

RankResult rank_with_lambda(const RankingInstance& canonical, std::span<const double> lambda,
                            double epsilon, const AssignOptions& options, double tolerance) {
  require_canonical(canonical, "rank_with_lambda");
  require_lambda(canonical, lambda);
  if (!(epsilon >= 0.0)) throw DataError("epsilon must be >= 0");
  RankResult result;
  result.assignment = inner_assign(canonical, lambda, epsilon, options);
  result.compliance = evaluate_compliance(canonical, result.assignment, tolerance);
  return result;
}

double tune_epsilon(std::span<const RankingInstance> instances,
                    std::span<const std::vector<double>> lambdas, const DualConfig& config) {
  config.validate();
  if (instances.empty()) throw DataError("tune_epsilon: empty training set");
  if (instances.size() != lambdas.size()) throw DataError("tune_epsilon: lambdas not aligned with instances");

  std::vector<double> grid = config.epsilon_grid;
  std::sort(grid.begin(), grid.end());
  double best_eps = grid.front();
  std::size_t best_violations = std::numeric_limits<std::size_t>::max();
  double best_utility = -std::numeric_limits<double>::infinity();
  for (const double eps : grid) {
    std::size_t violations = 0;
    double utility = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const RankResult r = rank_with_lambda(instances[i], lambdas[i], eps, config.assign_options,
                                            config.compliance_tolerance);
      if (!r.compliance.compliant) ++violations;
      utility += r.compliance.utility;
    }
    utility /= static_cast<double>(instances.size());
    const double utility_tol = 1e-12 * std::max(1.0, std::abs(best_utility));
    const bool better = violations < best_violations ||
                        (violations == best_violations && utility > best_utility + utility_tol);
    if (better) {
      best_eps = eps;
      best_violations = violations;
      best_utility = utility;
    }
  }
  return best_eps;
}

}  // namespace shadowrank
