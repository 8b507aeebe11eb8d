#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mocha/decay.hpp"
#include "mocha/encoding.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

TEST(PositionalEncoding, ZeroInput) {
  const Eigen::VectorXd pe = positional_encoding(0.0, 2);
  ASSERT_EQ(pe.size(), 4);
  EXPECT_EQ(pe(0), 0.0);
  EXPECT_EQ(pe(1), 0.0);
  EXPECT_EQ(pe(2), 1.0);
  EXPECT_EQ(pe(3), 1.0);
}

TEST(PositionalEncoding, QuarterPeriod) {
  const Eigen::VectorXd pe = positional_encoding(std::numbers::pi / 2.0, 1);
  EXPECT_NEAR(pe(0), 1.0, 1e-15);
  EXPECT_NEAR(pe(1), 0.0, 1e-15);
}

TEST(PositionalEncoding, MatchesScalarFormula) {
  const double x = 3.7;
  const int d = 4;
  const Eigen::VectorXd pe = positional_encoding(x, d);
  for (int i = 0; i < d; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(i) / d);
    EXPECT_NEAR(pe(i), std::sin(x / freq), 1e-15);
    EXPECT_NEAR(pe(i + d), std::cos(x / freq), 1e-15);
  }
}

TEST(PositionalEncoding, Bounded) {
  for (double x : {0.0, 1e-3, 2.0, 77.0, 1e6}) {
    const Eigen::VectorXd pe = positional_encoding(x, 8);
    EXPECT_LE(pe.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(TypeState, NeverSeenTypesUseQueryTime) {
  const std::vector<Event> history{{1.0, 0}, {2.5, 2}, {3.0, 0}};
  const TypeStateAtTime s = type_state(history, 4.0, 3);
  EXPECT_DOUBLE_EQ(*s.t_last[0], 3.0);
  EXPECT_FALSE(s.t_last[1].has_value());
  EXPECT_DOUBLE_EQ(s.tau(0), 1.0);
  EXPECT_DOUBLE_EQ(s.tau(1), 4.0);
  EXPECT_DOUBLE_EQ(s.tau(2), 1.5);
}

TEST(Embeddings, AllZeroGap) {
  HyperParameters hp = default_hyperparameters(3);
  ModelParameters p = zero_parameters(hp);
  const TypeStateAtTime s = type_state({}, 0.0, 3);
  const Eigen::MatrixXd H = build_embeddings(s, p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(H.row(k).head(hp.d).cwiseAbs().sum(), 0.0);
    EXPECT_EQ(H.row(k).tail(hp.d).sum(), hp.d);
  }
}

TEST(Embeddings, RowIsEncodingPlusTypeVector) {
  std::mt19937_64 rng(3);
  HyperParameters hp = default_hyperparameters(4);
  ModelParameters p = init_parameters(hp, 3);
  const EventSequence seq = testing::random_sequence(4, 6, 5.0, rng);
  const double t = 5.0;
  const TypeStateAtTime s = type_state(seq.events, t, 4);
  const Eigen::MatrixXd H = build_embeddings(s, p);
  for (int k = 0; k < 4; ++k) {
    double last = -1.0;
    for (const auto& e : seq.events)
      if (e.k == k) last = e.t;
    const double tau = last < 0.0 ? t : t - last;
    for (int i = 0; i < hp.d; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(i) / hp.d);
      EXPECT_NEAR(H(k, i), std::sin(tau / freq) + p.E_type(k, i), 1e-14);
      EXPECT_NEAR(H(k, i + hp.d), std::cos(tau / freq) + p.E_type(k, i + hp.d), 1e-14);
    }
  }
}

TEST(Embeddings, TranslationInvariant) {
  HyperParameters hp = default_hyperparameters(3);
  ModelParameters p = init_parameters(hp, 5);
  std::vector<Event> a{{0.5, 0}, {1.25, 2}};
  std::vector<Event> b = a;
  for (auto& e : b) e.t += 3.0;
  // Type 1 never occurs, so its gap grows with the shift; compare the others.
  const Eigen::MatrixXd Ha = build_embeddings(type_state(a, 2.0, 3), p);
  const Eigen::MatrixXd Hb = build_embeddings(type_state(b, 5.0, 3), p);
  EXPECT_TRUE(Ha.row(0).isApprox(Hb.row(0), 1e-12));
  EXPECT_TRUE(Ha.row(2).isApprox(Hb.row(2), 1e-12));
}

double decay_oracle(double dt, const ModelParameters& p) {
  if (dt <= 0.0) return 0.0;
  const int d = p.embedding_dim() / 2;
  std::vector<double> pe(static_cast<std::size_t>(2 * d));
  for (int i = 0; i < d; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(i) / d);
    pe[static_cast<std::size_t>(i)] = std::sin(dt / freq);
    pe[static_cast<std::size_t>(i + d)] = std::cos(dt / freq);
  }
  double out = p.b2;
  for (int j = 0; j < p.hidden(); ++j) {
    double z = p.b1(j);
    for (int c = 0; c < 2 * d; ++c) z += p.W_fc1(j, c) * pe[static_cast<std::size_t>(c)];
    out += p.W_fc2(j) * std::max(0.0, z);
  }
  return 1.0 / (1.0 + std::exp(-out));
}

TEST(Decay, ClampedAtNonPositiveGap) {
  const ModelParameters p = init_parameters(default_hyperparameters(3), 1);
  EXPECT_EQ(decay(0.0, p), 0.0);
  EXPECT_EQ(decay(-2.0, p), 0.0);
  ModelParameters grad = zero_parameters(default_hyperparameters(3));
  DecayCache cache;
  EXPECT_EQ(decay_forward(-1.0, p, cache), 0.0);
  decay_backward(cache, p, 1.0, grad);
  EXPECT_EQ(grad.W_fc1.cwiseAbs().sum() + grad.b1.cwiseAbs().sum() + std::abs(grad.b2), 0.0);
}

TEST(Decay, MatchesHandEvaluation) {
  std::mt19937_64 rng(8);
  ModelParameters p = init_parameters(default_hyperparameters(3), 8);
  testing::jitter(p, 0.2, rng);
  for (double dt : {1e-4, 0.3, 1.0, 4.2, 60.0}) {
    const double v = decay(dt, p);
    EXPECT_NEAR(v, decay_oracle(dt, p), 1e-14);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Decay, ParameterGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  const HyperParameters hp = default_hyperparameters(3);
  ModelParameters p = init_parameters(hp, 12);
  testing::jitter(p, 0.2, rng);
  for (double dt : {0.2, 1.7, 9.0}) {
    ModelParameters grad = zero_parameters(hp);
    DecayCache cache;
    decay_forward(dt, p, cache);
    decay_backward(cache, p, 1.0, grad);
    ModelParameters probe = p;
    double diff2 = 0.0, norm2 = 0.0;
    std::vector<std::span<double>> views;
    std::vector<std::span<const double>> gviews;
    visit_tensors(probe, [&](std::string_view, Eigen::Index, Eigen::Index, std::span<double> v) { views.push_back(v); });
    visit_tensors(grad, [&](std::string_view, Eigen::Index, Eigen::Index, std::span<const double> v) { gviews.push_back(v); });
    for (std::size_t t = 0; t < views.size(); ++t) {
      for (std::size_t i = 0; i < views[t].size(); ++i) {
        double& x = views[t][i];
        const double saved = x;
        const double h = 1e-6;
        x = saved + h;
        const double up = decay(dt, probe);
        x = saved - h;
        const double down = decay(dt, probe);
        x = saved;
        const double fd = (up - down) / (2 * h);
        diff2 += (fd - gviews[t][i]) * (fd - gviews[t][i]);
        norm2 += fd * fd;
      }
    }
    EXPECT_LT(std::sqrt(diff2 / norm2), 1e-5) << "dt=" << dt;
  }
}

}  // namespace
}  // namespace mocha
