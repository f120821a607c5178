#include "shadowrank/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace shadowrank {

std::string_view strategy_label(Strategy strategy) {
  switch (strategy) {
    case Strategy::kNoOpt:
      return "no_opt";
    case Strategy::kOptimal:
      return "optimal";
    case Strategy::kMean:
      return "mean";
    case Strategy::kKnn:
      return "knn";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "no_opt") return Strategy::kNoOpt;
  if (name == "optimal") return Strategy::kOptimal;
  if (name == "mean") return Strategy::kMean;
  if (name == "knn") return Strategy::kKnn;
  throw DataError("unknown strategy '" + std::string(name) + "'");
}

std::vector<Strategy> parse_strategy_list(std::string_view csv) {
  std::vector<Strategy> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    const auto token = csv.substr(0, comma);
    if (!token.empty()) out.push_back(parse_strategy(token));
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  if (out.empty()) throw DataError("empty strategy list");
  return out;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
}

void check_dimensions(const RankingInstance& instance, std::size_t constraints, std::size_t dims) {
  if (instance.num_constraints() != constraints)
    throw DataError("user '" + instance.user_id() + "': expected " + std::to_string(constraints) +
                    " constraints, found " + std::to_string(instance.num_constraints()));
  if (instance.covariates().size() != dims)
    throw DataError("user '" + instance.user_id() + "': expected " + std::to_string(dims) +
                    " covariates, found " + std::to_string(instance.covariates().size()));
  if (!is_canonical(instance))
    throw DataError("user '" + instance.user_id() + "': instance must be canonical");
}

}  // namespace

TrainedArtifact offline_train(std::span<const RankingInstance> train_set, const TrainOptions& options) {
  if (train_set.empty()) throw DataError("offline_train: empty training set");
  options.dual.validate();
  const std::size_t K = train_set.front().num_constraints();
  const std::size_t d = train_set.front().covariates().size();
  for (const auto& inst : train_set) check_dimensions(inst, K, d);

  std::vector<ShadowPriceVector> solved(train_set.size());
  parallel_for(train_set.size(), options.threads,
               [&](std::size_t i) { solved[i] = solve_dual(train_set[i], options.dual); });

  TrainedArtifact artifact;
  artifact.dual_config = options.dual;
  artifact.predictor_config = options.predictor;
  artifact.constraints = K;
  artifact.dims = d;

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (solved[i].infeasible_flag) {
      artifact.skipped_users.push_back(train_set[i].user_id());
      if (options.warn)
        options.warn("skipping user '" + train_set[i].user_id() +
                     "': shadow prices diverged (constraints look infeasible)");
      continue;
    }
    kept.push_back(i);
  }
  if (kept.empty()) throw InfeasibleError("offline_train: every training instance is infeasible");

  std::vector<RankingInstance> solved_instances;
  std::vector<std::vector<double>> lambdas;
  Matrix covariates(kept.size(), d);
  artifact.train_lambdas = Matrix(kept.size(), K);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto& inst = train_set[kept[r]];
    solved_instances.push_back(inst);
    lambdas.push_back(solved[kept[r]].lambda);
    artifact.train_users.push_back(inst.user_id());
    std::copy(inst.covariates().begin(), inst.covariates().end(), covariates.row(r).begin());
    std::copy(lambdas.back().begin(), lambdas.back().end(), artifact.train_lambdas.row(r).begin());
  }

  artifact.epsilon = tune_epsilon(solved_instances, lambdas, options.dual);
  artifact.predictor = LambdaPredictor::fit(options.predictor, covariates, artifact.train_lambdas);
  artifact.mean_lambda =
      LambdaPredictor::fit({PredictorKind::kMean, 1, false}, covariates, artifact.train_lambdas).mean_lambda();
  return artifact;
}

OnlineResult online_rank(const TrainedArtifact& artifact, const RankingInstance& canonical,
                         Strategy strategy) {
  check_dimensions(canonical, artifact.constraints, artifact.dims);
  OnlineResult result;
  const auto start = std::chrono::steady_clock::now();
  switch (strategy) {
    case Strategy::kNoOpt:
      result.lambda.assign(artifact.constraints, 0.0);
      break;
    case Strategy::kMean:
      result.lambda = artifact.mean_lambda;
      break;
    case Strategy::kKnn:
      result.lambda = artifact.predictor.predict(canonical.covariates());
      break;
    case Strategy::kOptimal:
      result.lambda = solve_dual(canonical, artifact.dual_config).lambda;
      break;
  }
  const double epsilon = strategy == Strategy::kNoOpt ? 0.0 : artifact.epsilon;
  result.assignment = adjusted_assignment(canonical, result.lambda, epsilon, artifact.dual_config.assign_options);
  const auto stop = std::chrono::steady_clock::now();
  result.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  result.compliance =
      evaluate_compliance(canonical, result.assignment, artifact.dual_config.compliance_tolerance);
  return result;
}

LatencySummary summarize_latency(std::vector<double> samples_ms) {
  if (samples_ms.empty()) return {};
  std::sort(samples_ms.begin(), samples_ms.end());
  auto rank = [&](double p) {
    const auto n = static_cast<double>(samples_ms.size());
    const auto idx = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n))) - 1;
    return samples_ms[std::min(idx, samples_ms.size() - 1)];
  };
  return {rank(50.0), rank(95.0), rank(99.0), samples_ms.back()};
}

EvaluationReport evaluate(const TrainedArtifact& artifact, const InstanceSource& test_set,
                          std::span<const Strategy> strategies, const EvaluateOptions& options) {
  if (test_set.size() == 0) throw DataError("evaluate: empty test set");
  const int repeats = std::max(1, options.repeats);
  EvaluationReport report;
  for (const Strategy strategy : strategies) {
    StrategyReport row;
    row.strategy = strategy;
    std::vector<double> latencies;
    std::size_t compliant = 0;
    double utility = 0.0;
    for (std::size_t u = 0; u < test_set.size(); ++u) {
      try {
        const RankingInstance instance = test_set.fetch(u);
        if (options.warmup) (void)online_rank(artifact, instance, strategy);
        for (int r = 0; r < repeats; ++r) {
          const OnlineResult result = online_rank(artifact, instance, strategy);
          latencies.push_back(result.latency_ms);
          if (r == 0) {
            compliant += result.compliance.compliant ? 1 : 0;
            utility += result.compliance.utility;
          }
        }
        ++row.n_users;
      } catch (const Error&) {
        ++row.failures;
      }
    }
    if (row.n_users > 0) {
      row.compliance_probability = static_cast<double>(compliant) / static_cast<double>(row.n_users);
      row.mean_utility = utility / static_cast<double>(row.n_users);
    }
    row.latency = summarize_latency(std::move(latencies));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace shadowrank
