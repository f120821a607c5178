#include "shadowrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace shadowrank {

std::string_view lambda_law_name(LambdaLaw law) {
  switch (law) {
    case LambdaLaw::kClustered:
      return "clustered";
    case LambdaLaw::kLinear:
      return "linear";
    case LambdaLaw::kConstant:
      return "constant";
  }
  return "unknown";
}

LambdaLaw parse_lambda_law(std::string_view name) {
  if (name == "clustered") return LambdaLaw::kClustered;
  if (name == "linear") return LambdaLaw::kLinear;
  if (name == "constant") return LambdaLaw::kConstant;
  throw DataError("unknown lambda law '" + std::string(name) + "'");
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t SplitMix64::below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

void SynthConfig::validate() const {
  if (n_users == 0) throw DataError("synth: n_users must be >= 1");
  if (ranks == 0 || items < ranks) throw DataError("synth: need items >= ranks >= 1");
  if (!(binding_fraction >= 0.0 && binding_fraction <= 1.0))
    throw DataError("synth: binding_fraction must lie in [0, 1]");
  if (constraints == 0 && binding_fraction > 0.0)
    throw DataError("synth: binding users need at least one constraint");
  if (constraints > 0 && ranks < constraints + 1)
    throw DataError("synth: need ranks > constraints so every topic is exposed in the witness ranking");
  if (law == LambdaLaw::kClustered && clusters == 0) throw DataError("synth: clusters must be >= 1");
  if (!(exposure_share > 0.0 && exposure_share <= 1.0)) throw DataError("synth: exposure_share must lie in (0, 1]");
  if (!(utility_noise >= 0.0)) throw DataError("synth: utility_noise must be >= 0");
}

namespace {

constexpr double kMinUtility = 1.0;
constexpr double kMaxUtility = 5.0;
constexpr double kAdjustStep = 0.25;
constexpr int kMaxAdjustments = 64;

int topic_of(std::size_t item, std::size_t K) {
  const std::size_t t = item % (K + 1);
  return t < K ? static_cast<int>(t) : -1;
}

struct Problem {
  std::size_t K = 0;
  std::vector<int> topic;           // per item
  std::vector<double> bound;        // absolute exposure bound per topic
  DiscountVector gamma;
};

// Per-topic violation at lambda = 0 (sorted ranking, stable ties).
std::vector<bool> violated_topics(const Problem& p, std::span<const double> u) {
  const std::size_t m2 = p.gamma.size();
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
  std::vector<double> exposure(p.K, 0.0);
  for (std::size_t j = 0; j < m2; ++j) {
    const int t = p.topic[order[j]];
    if (t >= 0) exposure[static_cast<std::size_t>(t)] += p.gamma[j];
  }
  std::vector<bool> out(p.K);
  for (std::size_t k = 0; k < p.K; ++k) out[k] = exposure[k] < p.bound[k];
  return out;
}

void build_utility(const Problem& p, std::span<const double> base, std::span<const double> penalty,
                   std::span<const double> jitter, std::vector<double>& u) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    double v = base[i] + jitter[i];
    const int t = p.topic[i];
    if (t >= 0) v -= penalty[static_cast<std::size_t>(t)];
    u[i] = std::clamp(v, kMinUtility, kMaxUtility);
  }
}

}  // namespace

Dataset synth_generate(const SynthConfig& config) {
  config.validate();
  SplitMix64 rng(config.seed);
  const std::size_t m1 = config.items;
  const std::size_t m2 = config.ranks;
  const std::size_t K = config.constraints;
  const std::size_t d = config.dims;

  Problem problem;
  problem.K = K;
  problem.gamma = DiscountVector::dcg(m2);
  problem.topic.resize(m1);
  for (std::size_t i = 0; i < m1; ++i) problem.topic[i] = topic_of(i, K);

  Dataset dataset;
  DatasetHeader& h = dataset.header;
  h.items = m1;
  h.ranks = m2;
  h.dims = d;
  h.gamma.dcg = true;
  for (std::size_t k = 0; k < K; ++k) {
    // Witness: the identity ranking puts item j at rank j.
    double witness = 0.0;
    for (std::size_t j = 0; j < m2; ++j)
      if (problem.topic[j] == static_cast<int>(k)) witness += problem.gamma[j];
    ConstraintTableRow row;
    row.label = "topic_" + std::to_string(k);
    row.sense = Sense::kGreaterEqual;
    row.bound_kind = BoundKind::kFractionOfTotalExposure;
    row.bound = config.exposure_share * witness / problem.gamma.total();
    std::vector<double> member(m1, 0.0);
    for (std::size_t i = 0; i < m1; ++i)
      if (problem.topic[i] == static_cast<int>(k)) member[i] = 1.0;
    row.shared_weights = std::move(member);
    h.constraints.push_back(std::move(row));
    problem.bound.push_back(row.bound * problem.gamma.total());
  }
  // Canonicalization multiplies the fraction back by the total; use the
  // same product so generator checks and solver checks agree.
  for (std::size_t k = 0; k < K; ++k) problem.bound[k] = h.constraints[k].bound * problem.gamma.total();

  std::vector<double> popularity(m1);
  for (double& v : popularity) v = rng.uniform(2.0, 4.5);

  // Law parameters.
  const std::size_t n_clusters = config.law == LambdaLaw::kClustered ? config.clusters : 1;
  std::vector<std::vector<double>> centers(n_clusters, std::vector<double>(d));
  std::vector<std::vector<double>> cluster_penalty(n_clusters, std::vector<double>(K));
  std::vector<std::vector<double>> cluster_taste(n_clusters, std::vector<double>(m1));
  for (std::size_t c = 0; c < n_clusters; ++c) {
    for (double& v : centers[c]) v = rng.uniform(-1.0, 1.0);
    for (double& v : cluster_penalty[c]) v = rng.uniform(0.0, 2.0);
    for (double& v : cluster_taste[c]) v = rng.uniform(-0.5, 0.5);
  }
  std::vector<std::vector<double>> linear_weights(K, std::vector<double>(d));
  for (auto& w : linear_weights)
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
  // Clustered law: non-binding users sit around their own center so that
  // binding status is visible in the covariates.
  std::vector<double> free_center(d);
  if (config.law == LambdaLaw::kClustered)
    for (double& v : free_center) v = rng.uniform(-1.0, 1.0);

  auto linear_penalty = [&](std::span<const double> x, std::vector<double>& out) {
    for (std::size_t k = 0; k < K; ++k) {
      const double z = std::inner_product(linear_weights[k].begin(), linear_weights[k].end(), x.begin(), 0.0);
      out[k] = std::clamp(1.0 + z / std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1))), 0.0, 2.5);
    }
  };

  // Linear law: covariates are drawn up front so binding status can follow
  // the total penalty.
  std::vector<std::vector<double>> linear_x;
  if (config.law == LambdaLaw::kLinear) {
    linear_x.assign(config.n_users, std::vector<double>(d));
    for (auto& x : linear_x)
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
  }

  // Exactly round(binding_fraction * n) binding users: the highest total
  // penalty under the linear law, spread evenly otherwise.
  const auto n_binding = static_cast<std::size_t>(std::llround(config.binding_fraction * static_cast<double>(config.n_users)));
  std::vector<bool> binding(config.n_users, false);
  if (config.law == LambdaLaw::kLinear) {
    std::vector<double> total(config.n_users);
    std::vector<double> p(K);
    for (std::size_t u = 0; u < config.n_users; ++u) {
      linear_penalty(linear_x[u], p);
      total[u] = std::accumulate(p.begin(), p.end(), 0.0);
    }
    std::vector<std::size_t> order(config.n_users);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return total[a] > total[b]; });
    for (std::size_t b = 0; b < n_binding; ++b) binding[order[b]] = true;
  } else {
    for (std::size_t b = 0; b < n_binding; ++b) binding[b * config.n_users / std::max<std::size_t>(n_binding, 1)] = true;
  }

  const int width = static_cast<int>(std::to_string(config.n_users).size());
  std::vector<double> base(m1);
  std::vector<double> jitter(m1);
  std::vector<double> penalty(K);
  for (std::size_t user = 0; user < config.n_users; ++user) {
    UserRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "u%0*zu", width, user);
    r.user_id = id;
    r.covariates.resize(d);

    std::size_t cluster = 0;
    switch (config.law) {
      case LambdaLaw::kClustered:
        cluster = rng.below(n_clusters);
        for (std::size_t c = 0; c < d; ++c) {
          const double center = binding[user] ? centers[cluster][c] : free_center[c];
          r.covariates[c] = center + rng.uniform(-0.1, 0.1);
        }
        penalty = cluster_penalty[cluster];
        break;
      case LambdaLaw::kLinear:
        r.covariates = linear_x[user];
        linear_penalty(r.covariates, penalty);
        break;
      case LambdaLaw::kConstant:
        for (double& v : r.covariates) v = rng.uniform(-1.0, 1.0);
        penalty = cluster_penalty[0];
        break;
    }
    for (std::size_t i = 0; i < m1; ++i) base[i] = popularity[i] + cluster_taste[cluster][i];
    for (double& v : jitter) v = config.utility_noise > 0.0 ? rng.uniform(-config.utility_noise, config.utility_noise) : 0.0;

    r.utility.resize(m1);
    if (K > 0 && binding[user]) {
      build_utility(problem, base, penalty, jitter, r.utility);
      for (int step = 0; step < kMaxAdjustments; ++step) {
        const auto v = violated_topics(problem, r.utility);
        if (std::any_of(v.begin(), v.end(), [](bool b) { return b; })) break;
        for (double& p : penalty) p += kAdjustStep;
        build_utility(problem, base, penalty, jitter, r.utility);
      }
    } else {
      std::fill(penalty.begin(), penalty.end(), 0.0);
      build_utility(problem, base, penalty, jitter, r.utility);
      for (int step = 0; step < kMaxAdjustments; ++step) {
        const auto v = violated_topics(problem, r.utility);
        if (std::none_of(v.begin(), v.end(), [](bool b) { return b; })) break;
        for (std::size_t k = 0; k < K; ++k)
          if (v[k]) penalty[k] -= kAdjustStep;
        build_utility(problem, base, penalty, jitter, r.utility);
      }
    }
    dataset.users.push_back(std::move(r));
  }
  return dataset;
}

}  // namespace shadowrank
