#pragma once

// Seeded synthetic populations. Items share a catalog with K disjoint topics
// (item i belongs to topic i mod (K + 1) when that is < K); each constraint
// asks for a share of total exposure per topic. Bounds are set below the
// exposure topics receive in the identity ranking, so every user is feasible.
//
// How users dislike topics (and hence how large their shadow prices are)
// follows the lambda law:
//   CLUSTERED  utilities depend only on the user's cluster; covariates are a
//              noisy copy of the cluster centre
//   LINEAR     topic penalties are a clipped linear function of covariates
//   CONSTANT   one penalty vector for everyone; covariates are pure noise
//
// Randomness comes from SplitMix64 with explicit integer-to-double
// conversion, so output is identical across platforms.

#include <cstdint>
#include <string_view>

#include "shadowrank/io.hpp"

namespace shadowrank {

enum class LambdaLaw { kClustered, kLinear, kConstant };

std::string_view lambda_law_name(LambdaLaw law);
LambdaLaw parse_lambda_law(std::string_view name);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_users = 200;
  std::size_t items = 100;  // m1
  std::size_t ranks = 20;   // m2
  std::size_t constraints = 3;
  std::size_t dims = 20;
  LambdaLaw law = LambdaLaw::kClustered;
  // Share of users whose unconstrained ranking violates a constraint.
  double binding_fraction = 0.8;
  std::size_t clusters = 5;
  // Per-user, per-item utility jitter amplitude.
  double utility_noise = 0.0;
  // Each bound is this share of the exposure its topic gets in the witness
  // ranking.
  double exposure_share = 0.6;

  void validate() const;
};

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
};

Dataset synth_generate(const SynthConfig& config);

}  // namespace shadowrank
