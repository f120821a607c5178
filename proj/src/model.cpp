#include "shadowrank/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shadowrank/kernels.hpp"

namespace shadowrank {

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string where(const std::string& user_id, const std::string& what) {
  return "instance '" + user_id + "': " + what;
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw DataError("ragged matrix rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const { return shadowrank::all_finite(data_); }

DiscountVector::DiscountVector(std::vector<double> weights) : weights_(std::move(weights)) {
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!std::isfinite(weights_[j]) || weights_[j] <= 0.0)
      throw DataError("discount weights must be finite and strictly positive");
    if (j > 0 && weights_[j] > weights_[j - 1])
      throw DataError("discount weights must be non-increasing");
  }
  total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DiscountVector DiscountVector::dcg(std::size_t ranks) {
  std::vector<double> w(ranks);
  for (std::size_t j = 0; j < ranks; ++j) w[j] = 1.0 / std::log2(static_cast<double>(j) + 2.0);
  return DiscountVector(std::move(w));
}

RankingInstance::RankingInstance(std::string user_id, std::vector<double> utility,
                                 DiscountVector gamma, std::vector<ConstraintSpec> constraints,
                                 std::vector<double> covariates)
    : user_id_(std::move(user_id)),
      utility_(std::move(utility)),
      gamma_(std::move(gamma)),
      constraints_(std::move(constraints)),
      covariates_(std::move(covariates)),
      items_(utility_.size()) {
  validate();
}

RankingInstance RankingInstance::dense(std::string user_id, Matrix utility, DiscountVector gamma,
                                       std::vector<ConstraintSpec> constraints,
                                       std::vector<double> covariates) {
  RankingInstance inst;
  inst.user_id_ = std::move(user_id);
  inst.items_ = utility.rows();
  inst.dense_utility_ = std::move(utility);
  inst.gamma_ = std::move(gamma);
  inst.constraints_ = std::move(constraints);
  inst.covariates_ = std::move(covariates);
  inst.validate();
  return inst;
}

void RankingInstance::validate() const {
  const std::size_t m1 = items_;
  const std::size_t m2 = gamma_.size();
  if (m2 < 1) throw DataError(where(user_id_, "need at least one rank"));
  if (m1 < m2) throw DataError(where(user_id_, "fewer items than ranks"));
  if (!all_finite(covariates_)) throw DataError(where(user_id_, "non-finite covariate"));
  if (dense_utility_) {
    if (dense_utility_->cols() != m2) throw DataError(where(user_id_, "utility matrix width != ranks"));
    if (!dense_utility_->all_finite()) throw DataError(where(user_id_, "non-finite utility"));
  } else if (!all_finite(utility_)) {
    throw DataError(where(user_id_, "non-finite utility"));
  }
  for (const auto& c : constraints_) {
    const std::string name = "constraint '" + c.label + "': ";
    if (!std::isfinite(c.bound)) throw DataError(where(user_id_, name + "non-finite bound"));
    if (c.bound_kind == BoundKind::kFractionOfTotalExposure && (c.bound < 0.0 || c.bound > 1.0))
      throw DataError(where(user_id_, name + "fraction bound outside [0, 1]"));
    if (dense_utility_) {
      if (!c.dense || c.dense->rows() != m1 || c.dense->cols() != m2)
        throw DataError(where(user_id_, name + "dense instance needs an m1 x m2 matrix"));
      if (!c.dense->all_finite()) throw DataError(where(user_id_, name + "non-finite entry"));
    } else {
      if (c.weights.size() != m1) throw DataError(where(user_id_, name + "length != items"));
      if (!all_finite(c.weights)) throw DataError(where(user_id_, name + "non-finite entry"));
    }
  }
}

double RankingInstance::utility_at(std::size_t item, std::size_t rank) const {
  if (dense_utility_) return (*dense_utility_)(item, rank);
  return utility_[item] * gamma_[rank];
}

double RankingInstance::constraint_at(std::size_t k, std::size_t item, std::size_t rank) const {
  const auto& c = constraints_[k];
  if (c.dense) return (*c.dense)(item, rank);
  return c.weights[item] * gamma_[rank];
}

RankingInstance normalize_constraints(const RankingInstance& instance) {
  if (is_canonical(instance)) return instance;
  std::vector<ConstraintSpec> canonical = instance.constraints();
  for (auto& c : canonical) {
    if (c.bound_kind == BoundKind::kFractionOfTotalExposure) {
      c.bound *= instance.gamma().total();
      c.bound_kind = BoundKind::kAbsolute;
    }
    if (c.sense == Sense::kLessEqual) {
      for (double& w : c.weights) w = -w;
      if (c.dense)
        for (double& w : c.dense->values()) w = -w;
      c.bound = -c.bound;
      c.sense = Sense::kGreaterEqual;
    }
  }
  std::vector<double> covariates(instance.covariates().begin(), instance.covariates().end());
  if (instance.is_dense()) {
    return RankingInstance::dense(instance.user_id(), *instance.dense_utility(), instance.gamma(),
                                  std::move(canonical), std::move(covariates));
  }
  return RankingInstance(instance.user_id(),
                         std::vector<double>(instance.utility().begin(), instance.utility().end()),
                         instance.gamma(), std::move(canonical), std::move(covariates));
}

bool is_canonical(const RankingInstance& instance) {
  return std::all_of(instance.constraints().begin(), instance.constraints().end(), [](const auto& c) {
    return c.sense == Sense::kGreaterEqual && c.bound_kind == BoundKind::kAbsolute;
  });
}

namespace {

void check_lambda(const RankingInstance& instance, std::span<const double> lambda, double epsilon) {
  if (lambda.size() != instance.num_constraints())
    throw DataError("lambda has " + std::to_string(lambda.size()) + " entries, instance has " +
                    std::to_string(instance.num_constraints()) + " constraints");
  if (!(epsilon >= 0.0)) throw DataError("epsilon must be >= 0");
}

}  // namespace

std::vector<double> score_vector(const RankingInstance& instance, std::span<const double> lambda,
                                 double epsilon) {
  check_lambda(instance, lambda, epsilon);
  if (instance.is_dense()) throw DataError("score_vector needs a fixed-discounting instance");
  std::vector<double> s(instance.utility().begin(), instance.utility().end());
  const auto& table = kernels::active();
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double scale = (1.0 + epsilon) * lambda[k];
    if (scale == 0.0) continue;
    table.axpy(scale, instance.constraints()[k].weights.data(), s.data(), s.size());
  }
  return s;
}

Matrix materialize_weight_matrix(const RankingInstance& instance, std::span<const double> lambda,
                                 double epsilon, std::size_t max_cells) {
  check_lambda(instance, lambda, epsilon);
  const std::size_t m1 = instance.items();
  const std::size_t m2 = instance.ranks();
  if (m1 * m2 > max_cells)
    throw SizeLimitError("weight matrix of " + std::to_string(m1) + "x" + std::to_string(m2) +
                         " exceeds the materialization cap; use the sort path");
  const auto& table = kernels::active();
  if (!instance.is_dense()) {
    const std::vector<double> s = score_vector(instance, lambda, epsilon);
    Matrix out(m1, m2);
    for (std::size_t i = 0; i < m1; ++i) table.scale(s[i], instance.gamma().values().data(), out.row(i).data(), m2);
    return out;
  }
  Matrix out = *instance.dense_utility();
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const double scale = (1.0 + epsilon) * lambda[k];
    if (scale == 0.0) continue;
    const auto src = instance.constraints()[k].dense->values();
    table.axpy(scale, src.data(), out.values().data(), out.values().size());
  }
  return out;
}

double raw_utility(const RankingInstance& instance, const Assignment& assignment) {
  const auto& ranks = assignment.item_at_rank;
  if (!instance.is_dense()) {
    return kernels::active().gather_dot(instance.utility().data(), ranks.data(),
                                        instance.gamma().values().data(), ranks.size());
  }
  double total = 0.0;
  for (std::size_t j = 0; j < ranks.size(); ++j) total += (*instance.dense_utility())(ranks[j], j);
  return total;
}

double constraint_value(const RankingInstance& instance, std::size_t k, const Assignment& assignment) {
  const auto& c = instance.constraints().at(k);
  const auto& ranks = assignment.item_at_rank;
  if (!c.dense) {
    return kernels::active().gather_dot(c.weights.data(), ranks.data(),
                                        instance.gamma().values().data(), ranks.size());
  }
  double total = 0.0;
  for (std::size_t j = 0; j < ranks.size(); ++j) total += (*c.dense)(ranks[j], j);
  return total;
}

}  // namespace shadowrank
