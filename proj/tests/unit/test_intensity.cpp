#include <gtest/gtest.h>

#include <cmath>

#include "mocha/decay.hpp"
#include "mocha/intensity.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::jitter;
using testing::random_matrix;
using testing::random_sequence;

StructuralWeights random_weights(int K, double scale, std::mt19937_64& rng) {
  StructuralWeights Wt;
  Wt.W = random_matrix(K, K, scale, rng);
  return Wt;
}

TEST(Orders, DynamicProgramMatchesEnumeration) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 2 + trial % 3;
    HyperParameters hp = default_hyperparameters(K);
    const ModelParameters params = init_parameters(hp, static_cast<std::uint64_t>(trial));
    const EventSequence seq = random_sequence(K, 7, 5.0, rng);
    const StructuralWeights Wt = random_weights(K, 0.8, rng);
    const double t = 5.0;
    const Eigen::MatrixXd dp = order_intensity_dp(seq.events, t, 3, Wt, params);
    ASSERT_EQ(dp.rows(), 3);
    for (int l = 1; l <= 3; ++l) {
      for (int k = 0; k < K; ++k) {
        const double brute = order_intensity_bruteforce(seq.events, t, k, l, Wt, params);
        EXPECT_NEAR(dp(l - 1, k), brute, 1e-12 * std::max(1.0, std::abs(brute)));
      }
    }
  }
}

TEST(Orders, FirstOrderIsWeightTimesDecay) {
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 1);
  std::mt19937_64 rng(1);
  const StructuralWeights Wt = random_weights(3, 1.0, rng);
  const std::vector<Event> history{{0.5, 2}};
  EXPECT_DOUBLE_EQ(first_order_influence(2, 1, 1.25, Wt, params), Wt.W(2, 1) * decay(1.25, params));
  const Eigen::MatrixXd dp = order_intensity_dp(history, 1.75, 1, Wt, params);
  EXPECT_NEAR(dp(0, 1), Wt.W(2, 1) * decay(1.25, params), 1e-15);
}

TEST(Orders, ChainProductAndOrdering) {
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 2);
  std::mt19937_64 rng(2);
  const StructuralWeights Wt = random_weights(3, 1.0, rng);
  const std::vector<Event> chain{{0.1, 0}, {0.6, 2}, {1.5, 1}};
  const double expected =
      Wt.W(0, 2) * decay(0.5, params) * Wt.W(2, 1) * decay(0.9, params);
  EXPECT_NEAR(chain_influence(chain, Wt, params), expected, 1e-15);

  const std::vector<Event> tied{{0.1, 0}, {0.1, 2}, {1.5, 1}};
  EXPECT_MOCHA_ERROR(ErrorCode::NonIncreasingChain, (void)chain_influence(tied, Wt, params));
}

TEST(Orders, EmptyHistoryHasNoExcitation) {
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 5);
  std::mt19937_64 rng(5);
  const StructuralWeights Wt = random_weights(3, 1.0, rng);
  const Eigen::MatrixXd dp = order_intensity_dp({}, 2.0, 2, Wt, params);
  EXPECT_TRUE(dp.isZero());
  const IntensityBreakdown b = total_intensity({}, 2.0, Wt, params, hp);
  for (int k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(b.lambda_linear(k), softplus(params.mu_raw(k)));
    EXPECT_DOUBLE_EQ(b.lambda_total(k), softplus(softplus(params.mu_raw(k))) + hp.epsilon);
  }
}

TEST(Orders, MonotoneInHistoryForNonNegativeWeights) {
  std::mt19937_64 rng(8);
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 8);
  StructuralWeights Wt;
  Wt.W = random_matrix(3, 3, 1.0, rng).cwiseAbs();
  EventSequence seq = random_sequence(3, 8, 4.0, rng);
  const double t = 4.5;
  Eigen::MatrixXd previous = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t n = 0; n <= seq.events.size(); ++n) {
    const std::span<const Event> prefix(seq.events.data(), n);
    const Eigen::MatrixXd now = order_intensity_dp(prefix, t, 3, Wt, params);
    EXPECT_TRUE((now.array() >= previous.array() - 1e-15).all()) << "prefix " << n;
    previous = now;
  }
}

TEST(Evaluator, MatchesStatelessIntensity) {
  std::mt19937_64 rng(13);
  for (Variant variant : {Variant::FullDynamic, Variant::MultiOrderStatic, Variant::HawkesMulti,
                          Variant::HawkesUni}) {
    HyperParameters hp = default_hyperparameters(4);
    hp.variant = variant;
    ModelParameters params = init_parameters(hp, 13);
    jitter(params, 0.2, rng);
    const EventSequence seq = random_sequence(4, 10, 6.0, rng);
    IntensityEvaluator evaluator(params, hp);
    for (const Event& e : seq.events) {
      const double t = e.t - 1e-3;
      if (t > (evaluator.history().empty() ? 0.0 : evaluator.history().back().t)) {
        const auto Wt = query_weights(evaluator.history(), t, params, hp);
        const auto expected = total_intensity(evaluator.history(), t, Wt, params, hp);
        const auto got = evaluator.evaluate(t);
        EXPECT_TRUE(got.lambda_total.isApprox(expected.lambda_total, 1e-12)) << to_string(variant);
      }
      evaluator.push(e);
    }
  }
}

TEST(Evaluator, MaxHistoryKeepsRecentEvents) {
  std::mt19937_64 rng(21);
  HyperParameters hp = default_hyperparameters(3);
  hp.max_history = 3;
  const ModelParameters params = init_parameters(hp, 21);
  const EventSequence seq = random_sequence(3, 9, 5.0, rng);
  IntensityEvaluator evaluator(params, hp);
  for (const Event& e : seq.events) evaluator.push(e);
  const std::span<const Event> last(seq.events.end() - 3, seq.events.end());
  HyperParameters all = hp;
  all.max_history = 0;
  const auto Wt = query_weights(seq.events, 5.5, params, hp);
  const auto expected = total_intensity(last, 5.5, Wt, params, all);
  EXPECT_TRUE(evaluator.evaluate(5.5).lambda_total.isApprox(expected.lambda_total, 1e-12));
}

TEST(Evaluator, RejectsOutOfOrderPush) {
  HyperParameters hp = default_hyperparameters(2);
  IntensityEvaluator evaluator(init_parameters(hp, 1), hp);
  evaluator.push({1.0, 0});
  EXPECT_MOCHA_ERROR(ErrorCode::NonMonotonicTime, evaluator.push({1.0, 1}));
  EXPECT_MOCHA_ERROR(ErrorCode::TypeOutOfRange, evaluator.push({2.0, 2}));
}

TEST(Evaluator, BoundCoversWindow) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    HyperParameters hp = default_hyperparameters(3);
    hp.L = 2;
    ModelParameters params = init_parameters(hp, 34 + static_cast<std::uint64_t>(trial));
    jitter(params, 0.1, rng);
    const EventSequence seq = random_sequence(3, 6, 3.0, rng);
    IntensityEvaluator evaluator(params, hp);
    for (const Event& e : seq.events) evaluator.push(e);
    const double t0 = seq.events.back().t;
    const double window = 0.5;
    const double bound = evaluator.upper_bound(t0, window);
    for (int i = 1; i <= 200; ++i) {
      const double t = t0 + window * i / 200.0;
      EXPECT_LE(evaluator.total(t), bound) << "trial " << trial << " t " << t;
    }
  }
}

TEST(Variants, UniMasksOffDiagonal) {
  std::mt19937_64 rng(40);
  HyperParameters hp = default_hyperparameters(3);
  hp.variant = Variant::HawkesUni;
  const ModelParameters params = init_parameters(hp, 40);
  const EventSequence seq = random_sequence(3, 5, 3.0, rng);
  const Eigen::MatrixXd W = query_weights(seq.events, 3.0, params, hp).W;
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v)
      if (u != v) EXPECT_EQ(W(u, v), 0.0);
  EXPECT_EQ(hp.effective_order(), 1);
}

TEST(Variants, StaticWeightsIgnoreClock) {
  std::mt19937_64 rng(41);
  HyperParameters hp = default_hyperparameters(3);
  hp.variant = Variant::MultiOrderStatic;
  const ModelParameters params = init_parameters(hp, 41);
  const EventSequence seq = random_sequence(3, 5, 3.0, rng);
  const Eigen::MatrixXd a = query_weights(seq.events, 3.0, params, hp).W;
  const Eigen::MatrixXd b = query_weights({}, 0.5, params, hp).W;
  EXPECT_TRUE(a.isApprox(b, 1e-15));

  hp.variant = Variant::FullDynamic;
  const Eigen::MatrixXd c = query_weights(seq.events, 3.0, params, hp).W;
  const Eigen::MatrixXd d = query_weights(seq.events, 7.0, params, hp).W;
  EXPECT_FALSE(c.isApprox(d, 1e-6));
}

TEST(Variants, DagMaskZeroesSubThresholdHops) {
  std::mt19937_64 rng(42);
  HyperParameters hp = default_hyperparameters(3);
  hp.dag_mask = true;
  const ModelParameters params = init_parameters(hp, 42);
  const EventSequence seq = random_sequence(3, 5, 3.0, rng);
  const Eigen::MatrixXd W = query_weights(seq.events, 3.0, params, hp).W;
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    const double w = W.data()[i];
    EXPECT_TRUE(w == 0.0 || edge_activation(w, hp.beta) > hp.theta);
  }
}

}  // namespace
}  // namespace mocha
