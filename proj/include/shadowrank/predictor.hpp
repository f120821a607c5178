#pragma once

// Covariates -> shadow prices. KNN interpolates stored training labels with
// inverse-distance weights; MEAN returns the average training label; ZERO
// always returns the zero vector (no optimization).

#include <span>
#include <string_view>
#include <vector>

#include "shadowrank/types.hpp"

namespace shadowrank {

enum class PredictorKind { kKnn, kMean, kZero };

std::string_view predictor_name(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view name);

struct PredictorConfig {
  PredictorKind kind = PredictorKind::kKnn;
  int k = 10;
  // Per-dimension z-scoring with training-set statistics before the
  // neighbor search.
  bool standardize = false;
};

class LambdaPredictor {
 public:
  LambdaPredictor() = default;

  static LambdaPredictor fit(const PredictorConfig& config, const Matrix& covariates,
                             const Matrix& lambdas);

  /// Rebuilds a fitted model from stored parts (artifact loading).
  static LambdaPredictor restore(PredictorKind kind, int k, std::size_t dims, Matrix train_x,
                                 Matrix train_lambda, std::vector<double> mean_lambda,
                                 std::vector<double> center, std::vector<double> spread);

  std::vector<double> predict(std::span<const double> x) const;

  PredictorKind kind() const { return kind_; }
  int k() const { return k_; }
  std::size_t dims() const { return dims_; }
  std::size_t outputs() const { return mean_lambda_.size(); }
  const Matrix& train_x() const { return train_x_; }
  const Matrix& train_lambda() const { return train_lambda_; }
  const std::vector<double>& mean_lambda() const { return mean_lambda_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& spread() const { return spread_; }
  bool standardized() const { return !center_.empty(); }

 private:
  void check_invariants() const;
  std::vector<double> transform(std::span<const double> x) const;

  PredictorKind kind_ = PredictorKind::kZero;
  int k_ = 0;
  std::size_t dims_ = 0;
  Matrix train_x_;       // stored in the transformed (standardized) space
  Matrix train_lambda_;
  std::vector<double> mean_lambda_;
  std::vector<double> center_;
  std::vector<double> spread_;
};

}  // namespace shadowrank
