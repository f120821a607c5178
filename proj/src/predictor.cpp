#include "shadowrank/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shadowrank/kernels.hpp"

namespace shadowrank {

namespace {

// Sum of f over a column, in sorted order so row order does not matter.
template <class F>
double column_sum(const Matrix& m, std::size_t col, F f) {
  std::vector<double> v(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) v[r] = f(m(r, col));
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

std::string_view predictor_name(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kKnn:
      return "knn";
    case PredictorKind::kMean:
      return "mean";
    case PredictorKind::kZero:
      return "zero";
  }
  return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view name) {
  if (name == "knn") return PredictorKind::kKnn;
  if (name == "mean") return PredictorKind::kMean;
  if (name == "zero") return PredictorKind::kZero;
  throw DataError("unknown predictor kind '" + std::string(name) + "'");
}

LambdaPredictor LambdaPredictor::fit(const PredictorConfig& config, const Matrix& covariates,
                                     const Matrix& lambdas) {
  const std::size_t n = lambdas.rows();
  if (n == 0) throw DataError("predictor fit: empty training set");
  if (covariates.rows() != n) throw DataError("predictor fit: covariate rows != label rows");
  if (!covariates.all_finite() || !lambdas.all_finite()) throw DataError("predictor fit: non-finite input");
  for (const double l : lambdas.values())
    if (l < 0.0) throw DataError("predictor fit: negative shadow price label");

  LambdaPredictor model;
  model.kind_ = config.kind;
  model.dims_ = covariates.cols();
  const std::size_t K = lambdas.cols();
  model.mean_lambda_.assign(K, 0.0);
  if (config.kind == PredictorKind::kZero) return model;

  for (std::size_t k = 0; k < K; ++k)
    model.mean_lambda_[k] = column_sum(lambdas, k, [](double v) { return v; }) / static_cast<double>(n);
  if (config.kind == PredictorKind::kMean) return model;

  if (config.k < 1 || static_cast<std::size_t>(config.k) > n)
    throw DataError("predictor fit: k must lie in [1, n]");
  model.k_ = config.k;
  model.train_lambda_ = lambdas;
  model.train_x_ = covariates;
  if (config.standardize) {
    const std::size_t d = model.dims_;
    model.center_.assign(d, 0.0);
    model.spread_.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      const double mu = column_sum(covariates, c, [](double v) { return v; }) / static_cast<double>(n);
      double s = std::sqrt(column_sum(covariates, c, [mu](double v) { return (v - mu) * (v - mu); }) /
                           static_cast<double>(n));
      model.center_[c] = mu;
      model.spread_[c] = s == 0.0 ? 1.0 : s;
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = model.transform(covariates.row(r));
      std::copy(row.begin(), row.end(), model.train_x_.row(r).begin());
    }
  }
  return model;
}

LambdaPredictor LambdaPredictor::restore(PredictorKind kind, int k, std::size_t dims, Matrix train_x,
                                         Matrix train_lambda, std::vector<double> mean_lambda,
                                         std::vector<double> center, std::vector<double> spread) {
  LambdaPredictor model;
  model.kind_ = kind;
  model.k_ = k;
  model.dims_ = dims;
  model.train_x_ = std::move(train_x);
  model.train_lambda_ = std::move(train_lambda);
  model.mean_lambda_ = std::move(mean_lambda);
  model.center_ = std::move(center);
  model.spread_ = std::move(spread);
  model.check_invariants();
  return model;
}

void LambdaPredictor::check_invariants() const {
  for (const double m : mean_lambda_)
    if (!(m >= 0.0)) throw DataError("predictor: negative mean label");
  if (kind_ != PredictorKind::kKnn) return;
  const std::size_t n = train_lambda_.rows();
  if (k_ < 1 || static_cast<std::size_t>(k_) > n) throw DataError("predictor: k must lie in [1, n]");
  if (train_x_.rows() != n || train_x_.cols() != dims_) throw DataError("predictor: training matrix shape");
  if (train_lambda_.cols() != mean_lambda_.size()) throw DataError("predictor: label width");
  for (const double l : train_lambda_.values())
    if (!(l >= 0.0)) throw DataError("predictor: negative label");
  if (center_.size() != spread_.size() || (!center_.empty() && center_.size() != dims_))
    throw DataError("predictor: standardization shape");
}

std::vector<double> LambdaPredictor::transform(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  if (center_.empty()) return out;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (out[c] - center_[c]) / spread_[c];
  return out;
}

std::vector<double> LambdaPredictor::predict(std::span<const double> x) const {
  if (x.size() != dims_)
    throw DataError("predict: covariate length " + std::to_string(x.size()) + " != " + std::to_string(dims_));
  const std::size_t K = mean_lambda_.size();
  if (kind_ == PredictorKind::kZero) return std::vector<double>(K, 0.0);
  if (kind_ == PredictorKind::kMean) return mean_lambda_;

  const std::vector<double> query = transform(x);
  const std::size_t n = train_x_.rows();
  const auto& table = kernels::active();
  std::vector<double> dist2(n);
  for (std::size_t r = 0; r < n; ++r) dist2[r] = table.squared_distance(query.data(), train_x_.row(r).data(), dims_);

  std::vector<std::size_t> chosen;
  const bool exact_hit = std::any_of(dist2.begin(), dist2.end(), [](double d) { return d == 0.0; });
  if (exact_hit) {
    for (std::size_t r = 0; r < n; ++r)
      if (dist2[r] == 0.0) chosen.push_back(r);
  } else {
    std::vector<double> sorted = dist2;
    const auto kth = sorted.begin() + (k_ - 1);
    std::nth_element(sorted.begin(), kth, sorted.end());
    const double radius = *kth;
    for (std::size_t r = 0; r < n; ++r)
      if (dist2[r] <= radius) chosen.push_back(r);
  }

  // Canonical summation order so the result does not depend on row order.
  auto lex_less = [](std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
    if (lex_less(train_lambda_.row(a), train_lambda_.row(b))) return true;
    if (lex_less(train_lambda_.row(b), train_lambda_.row(a))) return false;
    return lex_less(train_x_.row(a), train_x_.row(b));
  });

  std::vector<double> weight(chosen.size());
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    weight[i] = exact_hit ? 1.0 : 1.0 / std::sqrt(dist2[chosen[i]]);
    weight_sum += weight[i];
  }
  std::vector<double> out(K, 0.0);
  for (std::size_t i = 0; i < chosen.size(); ++i)
    table.axpy(weight[i] / weight_sum, train_lambda_.row(chosen[i]).data(), out.data(), K);
  for (double& v : out) v = std::max(0.0, v);
  return out;
}

}  // namespace shadowrank
