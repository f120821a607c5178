#pragma once

// Offline training (solve duals, tune epsilon, fit the shadow-price
// predictor) and online serving (predict, score, assign) plus per-strategy
// evaluation.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shadowrank/dual.hpp"
#include "shadowrank/model.hpp"
#include "shadowrank/predictor.hpp"

namespace shadowrank {

enum class Strategy { kNoOpt, kOptimal, kMean, kKnn };

std::string_view strategy_label(Strategy strategy);
Strategy parse_strategy(std::string_view name);
std::vector<Strategy> parse_strategy_list(std::string_view csv);

inline constexpr int kArtifactFormatVersion = 1;

struct TrainedArtifact {
  int format_version = kArtifactFormatVersion;
  LambdaPredictor predictor;        // used by the KNN strategy
  std::vector<double> mean_lambda;  // used by the MEAN strategy
  double epsilon = 0.0;
  Matrix train_lambdas;             // one row per solved training user
  std::vector<std::string> train_users;
  std::vector<std::string> skipped_users;
  DualConfig dual_config;
  PredictorConfig predictor_config;
  std::size_t constraints = 0;
  std::size_t dims = 0;
};

struct TrainOptions {
  DualConfig dual;
  PredictorConfig predictor;
  unsigned threads = 1;
  // Receives one message per skipped (infeasible) user.
  std::function<void(const std::string&)> warn;
};

/// Instances must be canonical. Throws InfeasibleError when every instance
/// is infeasible and DataError on inconsistent dimensions.
TrainedArtifact offline_train(std::span<const RankingInstance> train_set, const TrainOptions& options);

struct OnlineResult {
  Assignment assignment;
  ComplianceReport compliance;
  std::vector<double> lambda;
  double latency_ms = 0.0;  // predict + score + assign only
};

OnlineResult online_rank(const TrainedArtifact& artifact, const RankingInstance& canonical,
                         Strategy strategy);

struct LatencySummary {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentiles.
LatencySummary summarize_latency(std::vector<double> samples_ms);

struct StrategyReport {
  Strategy strategy = Strategy::kNoOpt;
  std::size_t n_users = 0;
  double compliance_probability = 0.0;
  double mean_utility = 0.0;
  LatencySummary latency;
  std::size_t failures = 0;
};

struct EvaluationReport {
  std::vector<StrategyReport> rows;
};

/// Test users by index. Fetching happens outside the timed region.
class InstanceSource {
 public:
  virtual ~InstanceSource() = default;
  virtual std::size_t size() const = 0;
  virtual RankingInstance fetch(std::size_t index) const = 0;
};

class SpanSource final : public InstanceSource {
 public:
  explicit SpanSource(std::span<const RankingInstance> instances) : instances_(instances) {}
  std::size_t size() const override { return instances_.size(); }
  RankingInstance fetch(std::size_t index) const override { return instances_[index]; }

 private:
  std::span<const RankingInstance> instances_;
};

struct EvaluateOptions {
  int repeats = 3;
  bool warmup = true;
};

EvaluationReport evaluate(const TrainedArtifact& artifact, const InstanceSource& test_set,
                          std::span<const Strategy> strategies, const EvaluateOptions& options = {});

}  // namespace shadowrank
