#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "shadowrank/assignment.hpp"
#include "shadowrank/dual.hpp"
#include "shadowrank/model.hpp"

namespace shadowrank::testing {

inline Matrix worked_u() {
  return Matrix::from_rows({{5, 4, 2, 1}, {5, 3, 3, 2}, {3, 3, 3, 3}, {2, 1, 0, 0}});
}

inline Matrix worked_a() {
  return Matrix::from_rows({{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 0.6, 0.5, 0.4}, {0, 0, 0, 0}});
}

inline Matrix worked_s() {
  return Matrix::from_rows({{5, 4, 2, 1}, {5, 3, 3, 2}, {7, 5.4, 5, 4.6}, {2, 1, 0, 0}});
}

inline RankingInstance worked_instance() {
  ConstraintSpec c;
  c.label = "attribute";
  c.bound = 0.7;
  c.dense = worked_a();
  return RankingInstance::dense("worked", worked_u(), DiscountVector({1, 1, 1, 1}), {c}, {});
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline DiscountVector random_gamma(std::mt19937_64& rng, std::size_t n) {
  auto g = random_vector(rng, n, 0.05, 1.0);
  std::sort(g.begin(), g.end(), std::greater<>());
  return DiscountVector(g);
}

// Factored instance with K constraints whose bound is a share of the exposure
// a random witness permutation achieves, so it is feasible.
inline RankingInstance random_feasible_instance(std::mt19937_64& rng, std::size_t m1, std::size_t m2, std::size_t K) {
  auto u = random_vector(rng, m1, 0.0, 5.0);
  DiscountVector gamma = random_gamma(rng, m2);
  std::vector<std::size_t> witness(m1);
  for (std::size_t i = 0; i < m1; ++i) witness[i] = i;
  std::shuffle(witness.begin(), witness.end(), rng);
  std::uniform_real_distribution<double> share(0.5, 1.0);
  std::bernoulli_distribution member(0.4);
  std::vector<ConstraintSpec> cs;
  for (std::size_t k = 0; k < K; ++k) {
    ConstraintSpec c;
    c.weights.resize(m1);
    for (double& w : c.weights) w = member(rng) ? 1.0 : 0.0;
    double exposure = 0.0;
    for (std::size_t j = 0; j < m2; ++j) exposure += c.weights[witness[j]] * gamma[j];
    c.bound = share(rng) * exposure;
    c.label = "c" + std::to_string(k);
    cs.push_back(std::move(c));
  }
  return RankingInstance("r", std::move(u), std::move(gamma), std::move(cs), {});
}

}  // namespace shadowrank::testing
