#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>

#include "shadowrank/io.hpp"
#include "shadowrank/pipeline.hpp"
#include "shadowrank/synth.hpp"
#include "support.hpp"

using namespace shadowrank;
using namespace shadowrank::testing;

namespace {

TrainOptions single_neighbor() {
  TrainOptions o;
  o.predictor.k = 1;
  return o;
}

struct SynthSplit {
  std::vector<RankingInstance> train;
  std::vector<RankingInstance> test;
};

SynthSplit synth_split(LambdaLaw law, std::size_t n_train, std::size_t n_test, double binding, std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.n_users = n_train + n_test;
  c.items = 60;
  c.ranks = 15;
  c.constraints = 2;
  c.dims = 6;
  c.law = law;
  c.binding_fraction = binding;
  const auto all = to_canonical_instances(synth_generate(c));
  SynthSplit s;
  s.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return s;
}

class SlowSource final : public InstanceSource {
 public:
  explicit SlowSource(std::span<const RankingInstance> inner) : inner_(inner) {}
  std::size_t size() const override { return inner_.size(); }
  RankingInstance fetch(std::size_t i) const override {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return inner_[i];
  }

 private:
  std::span<const RankingInstance> inner_;
};

}  // namespace

TEST(Strategy, LabelsRoundTrip) {
  for (auto s : {Strategy::kNoOpt, Strategy::kOptimal, Strategy::kMean, Strategy::kKnn})
    EXPECT_EQ(parse_strategy(strategy_label(s)), s);
  EXPECT_EQ(parse_strategy_list("no_opt,mean,knn,optimal").size(), 4u);
  EXPECT_THROW(parse_strategy("fastest"), DataError);
}

TEST(OfflineTrain, SingleWorkedExampleInstance) {
  const std::vector<RankingInstance> set{worked_instance()};
  const auto art = offline_train(set, single_neighbor());
  ASSERT_EQ(art.train_lambdas.rows(), 1u);
  EXPECT_NEAR(art.train_lambdas(0, 0), solve_dual(set[0]).lambda[0], 1e-12);
  const std::vector<std::vector<double>> lambdas{solve_dual(set[0]).lambda};
  EXPECT_EQ(art.epsilon, tune_epsilon(set, lambdas, DualConfig{}));
  EXPECT_TRUE(art.skipped_users.empty());
}

TEST(OfflineTrain, UnconstrainedCompliantGivesZeroPrices) {
  std::vector<RankingInstance> set;
  for (int i = 0; i < 3; ++i) {
    ConstraintSpec c;
    c.weights = {1, 0, 0};
    c.bound = 0.1;
    set.emplace_back("u" + std::to_string(i), std::vector<double>{3, 2, 1}, DiscountVector({1.0, 0.5}),
                     std::vector<ConstraintSpec>{c}, std::vector<double>{static_cast<double>(i)});
  }
  TrainOptions o;
  o.predictor.k = 2;
  const auto art = offline_train(set, o);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(art.train_lambdas(i, 0), 0.0);
  const std::vector<double> q{0.4};
  EXPECT_EQ(art.predictor.predict(q), (std::vector<double>{0.0}));
  EXPECT_EQ(art.mean_lambda, (std::vector<double>{0.0}));
}

TEST(OfflineTrain, SkipsInfeasibleAndFailsWhenAllAre) {
  ConstraintSpec ok;
  ok.weights = {0, 1, 0};
  ok.bound = 0.5;
  ConstraintSpec bad = ok;
  bad.bound = 5.0;
  std::vector<RankingInstance> set{
      RankingInstance("good", {3, 2, 1}, DiscountVector({1.0, 0.5}), {ok}, {0.0}),
      RankingInstance("bad", {3, 2, 1}, DiscountVector({1.0, 0.5}), {bad}, {1.0}),
  };
  std::vector<std::string> warnings;
  TrainOptions o = single_neighbor();
  o.warn = [&](const std::string& m) { warnings.push_back(m); };
  const auto art = offline_train(set, o);
  EXPECT_EQ(art.skipped_users, (std::vector<std::string>{"bad"}));
  EXPECT_EQ(art.train_users, (std::vector<std::string>{"good"}));
  EXPECT_EQ(warnings.size(), 1u);
  const std::vector<RankingInstance> only_bad{set[1]};
  EXPECT_THROW(offline_train(only_bad, o), InfeasibleError);
  EXPECT_THROW(offline_train({}, o), DataError);
}

TEST(OfflineTrain, SynthPopulationHasNoSkips) {
  SynthConfig c;
  c.n_users = 200;
  c.items = 50;
  c.ranks = 12;
  const auto set = to_canonical_instances(synth_generate(c));
  TrainOptions o;
  o.threads = 4;
  const auto art = offline_train(set, o);
  EXPECT_TRUE(art.skipped_users.empty());
  EXPECT_EQ(art.train_lambdas.rows(), 200u);
}

TEST(OfflineTrain, DeterministicAcrossThreadCounts) {
  const auto s = synth_split(LambdaLaw::kLinear, 60, 0, 0.8, 5);
  TrainOptions one, many;
  many.threads = 8;
  const auto a = offline_train(s.train, one);
  const auto b = offline_train(s.train, many);
  EXPECT_EQ(a.train_lambdas, b.train_lambdas);
  EXPECT_EQ(a.epsilon, b.epsilon);
}

TEST(OnlineRank, WorkedExampleStrategies) {
  const std::vector<RankingInstance> set{worked_instance()};
  const auto art = offline_train(set, single_neighbor());
  const auto no_opt = online_rank(art, set[0], Strategy::kNoOpt);
  EXPECT_EQ(no_opt.assignment.item_at_rank, (std::vector<std::int32_t>{1, 0, 2, 3}));
  EXPECT_EQ(no_opt.compliance.utility, 12.0);
  EXPECT_FALSE(no_opt.compliance.compliant);
  for (auto s : {Strategy::kOptimal, Strategy::kKnn, Strategy::kMean}) {
    const auto r = online_rank(art, set[0], s);
    EXPECT_TRUE(r.compliance.compliant) << strategy_label(s);
    EXPECT_EQ(r.compliance.utility, 10.0);
    EXPECT_GE(r.latency_ms, 0.0);
  }
}

TEST(OnlineRank, KnnMatchesClusterTrainingCompliance) {
  const auto s = synth_split(LambdaLaw::kClustered, 150, 50, 1.0, 6);
  TrainOptions o;
  o.threads = 4;
  const auto art = offline_train(s.train, o);
  // Every held-out user shares a cluster with training users of identical
  // utilities, so KNN reproduces OPTIMAL's outcome user by user.
  for (const auto& inst : s.test) {
    const auto knn = online_rank(art, inst, Strategy::kKnn);
    const auto opt = online_rank(art, inst, Strategy::kOptimal);
    EXPECT_EQ(knn.compliance.compliant, opt.compliance.compliant);
    EXPECT_TRUE(is_valid_assignment(knn.assignment, inst.items(), inst.ranks()));
  }
}

TEST(OnlineRank, RejectsDimensionMismatch) {
  const std::vector<RankingInstance> set{worked_instance()};
  const auto art = offline_train(set, single_neighbor());
  RankingInstance other("x", {1, 2, 3}, DiscountVector({1.0}), {}, {});
  EXPECT_THROW(online_rank(art, other, Strategy::kKnn), DataError);
}

TEST(Latency, NearestRankPercentiles) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  const auto s = summarize_latency(v);
  EXPECT_EQ(s.p50, 50.0);
  EXPECT_EQ(s.p95, 95.0);
  EXPECT_EQ(s.p99, 99.0);
  EXPECT_EQ(s.max, 100.0);
  const auto one = summarize_latency({3.0});
  EXPECT_EQ(one.p50, 3.0);
  EXPECT_EQ(one.max, 3.0);
  const auto empty = summarize_latency({});
  EXPECT_EQ(empty.max, 0.0);
}

TEST(Evaluate, NonBindingPopulationAllStrategiesEqual) {
  const auto s = synth_split(LambdaLaw::kClustered, 80, 40, 0.0, 7);
  const auto art = offline_train(s.train, TrainOptions{});
  const SpanSource src(s.test);
  const auto strategies = parse_strategy_list("no_opt,mean,knn,optimal");
  const auto rep = evaluate(art, src, strategies);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.compliance_probability, 1.0) << strategy_label(r.strategy);
    EXPECT_EQ(r.mean_utility, rep.rows[0].mean_utility);
    EXPECT_EQ(r.n_users, 40u);
  }
}

TEST(Evaluate, OrderingOnBindingPopulation) {
  const auto s = synth_split(LambdaLaw::kClustered, 300, 100, 1.0, 8);
  TrainOptions o;
  o.threads = 4;
  const auto art = offline_train(s.train, o);
  const SpanSource src(s.test);
  const auto strategies = parse_strategy_list("no_opt,mean,knn,optimal");
  EvaluateOptions eo;
  eo.repeats = 1;
  const auto rep = evaluate(art, src, strategies, eo);
  const double no_opt = rep.rows[0].compliance_probability;
  const double mean = rep.rows[1].compliance_probability;
  const double knn = rep.rows[2].compliance_probability;
  const double opt = rep.rows[3].compliance_probability;
  EXPECT_LE(no_opt, mean);
  EXPECT_LE(mean, knn);
  EXPECT_LE(knn, opt + 1e-12);
  for (const auto& r : rep.rows) {
    EXPECT_LE(r.latency.p50, r.latency.p95);
    EXPECT_LE(r.latency.p95, r.latency.p99);
    EXPECT_LE(r.latency.p99, r.latency.max);
    EXPECT_GE(r.compliance_probability, 0.0);
    EXPECT_LE(r.compliance_probability, 1.0);
    EXPECT_EQ(r.failures, 0u);
  }
}

TEST(Evaluate, ReproducibleExceptLatency) {
  const auto s = synth_split(LambdaLaw::kLinear, 100, 50, 0.8, 9);
  const auto art = offline_train(s.train, TrainOptions{});
  const SpanSource src(s.test);
  const auto strategies = parse_strategy_list("mean,knn");
  const auto a = evaluate(art, src, strategies);
  const auto b = evaluate(art, src, strategies);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].compliance_probability, b.rows[i].compliance_probability);
    EXPECT_EQ(a.rows[i].mean_utility, b.rows[i].mean_utility);
  }
}

TEST(Evaluate, SlowFetchDoesNotInflateLatency) {
  const auto s = synth_split(LambdaLaw::kClustered, 60, 10, 1.0, 10);
  const auto art = offline_train(s.train, TrainOptions{});
  const SlowSource slow(s.test);
  const SpanSource fast(s.test);
  const auto strategies = parse_strategy_list("knn");
  const auto rs = evaluate(art, slow, strategies);
  const auto rf = evaluate(art, fast, strategies);
  // Each fetch sleeps 20 ms; the timed region must not see it.
  EXPECT_LT(rs.rows[0].latency.max, 10.0);
  EXPECT_EQ(rs.rows[0].compliance_probability, rf.rows[0].compliance_probability);
  EXPECT_EQ(rs.rows[0].mean_utility, rf.rows[0].mean_utility);
}
