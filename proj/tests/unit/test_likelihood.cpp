#include <gtest/gtest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "mocha/intensity.hpp"
#include "mocha/likelihood.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::jitter;
using testing::random_sequence;

ModelParameters poisson_model(const HyperParameters& hp, double mu_raw) {
  ModelParameters p = init_parameters(hp, 9);
  p.W_proj.setZero();
  p.mu_raw.setConstant(mu_raw);
  return p;
}

// Composite rule over every inter-event interval, evaluated through the
// incremental evaluator rather than the training tape. `simpson` false gives
// the trapezoid rule on `panels` sub-intervals.
double integral_oracle(const EventSequence& seq, const ModelParameters& params,
                       const HyperParameters& hp, int panels, bool simpson) {
  IntensityEvaluator ev(params, hp);
  double total = 0.0;
  double left = 0.0;
  auto interval = [&](double a, double b) {
    if (!simpson) {
      const double h = (b - a) / panels;
      double s = 0.5 * (ev.total(a) + ev.total(b));
      for (int i = 1; i < panels; ++i) s += ev.total(a + i * h);
      total += s * h;
      return;
    }
    const double h = (b - a) / (2 * panels);
    double s = ev.total(a) + ev.total(b);
    for (int i = 1; i < 2 * panels; ++i) s += (i % 2 ? 4.0 : 2.0) * ev.total(a + i * h);
    total += s * h / 3.0;
  };
  for (const Event& e : seq.events) {
    interval(left, e.t);
    ev.push(e);
    left = e.t;
  }
  interval(left, seq.horizon);
  return total;
}

TEST(Likelihood, PoissonClosedForm) {
  std::mt19937_64 rng(1);
  for (int K : {2, 3, 5}) {
    HyperParameters hp = default_hyperparameters(K);
    const ModelParameters params = poisson_model(hp, -0.4);
    const double c = softplus(softplus(-0.4)) + hp.epsilon;
    const EventSequence seq = random_sequence(K, 15, 9.0, rng);
    const double closed = -static_cast<double>(seq.size()) * std::log(c) + K * c * seq.horizon;
    EXPECT_NEAR(nll(seq, params, hp), closed, 1e-10 * std::abs(closed));
  }
}

TEST(Likelihood, IntegralMatchesIndependentQuadrature) {
  std::mt19937_64 rng(2);
  HyperParameters hp = default_hyperparameters(3);
  hp.L = 2;
  ModelParameters params = init_parameters(hp, 2);
  jitter(params, 0.1, rng);
  const EventSequence seq = random_sequence(3, 6, 4.0, rng);
  hp.substeps = 40;
  const double same_nodes = integral_oracle(seq, params, hp, 40, false);
  EXPECT_NEAR(sequence_loss(seq, params, hp).integral, same_nodes, 1e-10 * same_nodes);
  // Attention kinks cap Simpson at second order too, so both sides are refined.
  hp.substeps = 6400;
  const double fine = integral_oracle(seq, params, hp, 6400, true);
  EXPECT_NEAR(sequence_loss(seq, params, hp).integral, fine, 1e-5 * fine);
}

TEST(Likelihood, LogTermUsesStrictHistory) {
  std::mt19937_64 rng(3);
  HyperParameters hp = default_hyperparameters(3);
  ModelParameters params = init_parameters(hp, 3);
  jitter(params, 0.1, rng);
  const EventSequence seq = random_sequence(3, 7, 5.0, rng);
  IntensityEvaluator ev(params, hp);
  double expected = 0.0;
  for (const Event& e : seq.events) {
    expected += std::log(ev.evaluate(e.t).lambda_total(e.k));
    ev.push(e);
  }
  EXPECT_NEAR(sequence_loss(seq, params, hp).log_intensity, expected, 1e-10 * std::abs(expected));
}

TEST(Likelihood, RegularizersMatchDenseExponential) {
  std::mt19937_64 rng(4);
  HyperParameters hp = default_hyperparameters(3);
  hp.gamma_acyclic = 0.3;
  hp.gamma_sparse = 0.05;
  ModelParameters params = init_parameters(hp, 4);
  jitter(params, 0.2, rng);
  const EventSequence seq = random_sequence(3, 6, 4.0, rng);
  double h = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::span<const Event> before(seq.events.data(), i);
    const Eigen::MatrixXd W = query_weights(before, seq.events[i].t, params, hp).W;
    const Eigen::MatrixXd M = W.cwiseProduct(W);
    h += M.exp().trace() - 3.0;
    l1 += W.cwiseAbs().sum();
  }
  const auto [acyclic, sparse] = regularizers(seq, params, hp);
  EXPECT_NEAR(acyclic, hp.gamma_acyclic * h, 1e-10 * std::max(1.0, acyclic));
  EXPECT_NEAR(sparse, hp.gamma_sparse * l1, 1e-12 * std::max(1.0, sparse));

  const LossBreakdown loss = sequence_loss(seq, params, hp);
  EXPECT_DOUBLE_EQ(loss.total, loss.nll + loss.acyclic + loss.sparse);
  EXPECT_NEAR(loss.nll, nll(seq, params, hp), 1e-12 * std::abs(loss.nll));
  EXPECT_NEAR(loss.nll, loss.integral - loss.log_intensity, 1e-12 * std::abs(loss.nll));
}

TEST(Likelihood, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (Variant variant : {Variant::FullDynamic, Variant::MultiOrderStatic, Variant::HawkesMulti,
                          Variant::HawkesUni}) {
    HyperParameters hp = default_hyperparameters(3);
    hp.variant = variant;
    hp.L = 2;
    ModelParameters params = init_parameters(hp, 5);
    jitter(params, 0.1, rng);
    std::vector<EventSequence> batch{random_sequence(3, 5, 4.0, rng, "a"),
                                     random_sequence(3, 5, 4.0, rng, "b")};
    const GradientCheckReport report = check_gradients(batch, params, hp);
    EXPECT_TRUE(report.passed(1e-4)) << to_string(variant) << " worst " << report.worst;
  }
}

TEST(Likelihood, BatchIsMeanOfSequences) {
  std::mt19937_64 rng(6);
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 6);
  const EventSequence seq = random_sequence(3, 6, 4.0, rng);
  const std::vector<EventSequence> copies(3, seq);
  ModelParameters single_grad = zero_parameters(hp);
  const LossBreakdown single = sequence_loss(seq, params, hp, &single_grad);
  const auto [mean, grad] = loss_and_gradient(copies, params, hp);
  EXPECT_NEAR(mean.total, single.total, 1e-12 * std::abs(single.total));
  EXPECT_NEAR(batch_loss(copies, params, hp).total, single.total, 1e-12 * std::abs(single.total));
  EXPECT_TRUE(grad.W_proj.isApprox(single_grad.W_proj, 1e-12));
  EXPECT_TRUE(grad.mu_raw.isApprox(single_grad.mu_raw, 1e-12));
}

TEST(Likelihood, NoStructureNoAttentionGradient) {
  std::mt19937_64 rng(7);
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = poisson_model(hp, 0.2);
  const std::vector<EventSequence> batch{random_sequence(3, 6, 4.0, rng)};
  const auto [loss, grad] = loss_and_gradient(batch, params, hp);
  EXPECT_TRUE(grad.W_Q.isZero());
  EXPECT_TRUE(grad.W_K.isZero());
  EXPECT_TRUE(grad.a_attn.isZero());
  EXPECT_TRUE(grad.W_fc1.isZero());
  EXPECT_FALSE(grad.mu_raw.isZero());
  EXPECT_DOUBLE_EQ(loss.acyclic, 0.0);
  EXPECT_DOUBLE_EQ(loss.sparse, 0.0);
}

TEST(Likelihood, RefinementShrinksIntegralChange) {
  std::mt19937_64 rng(8);
  HyperParameters hp = default_hyperparameters(3);
  hp.L = 2;
  ModelParameters params = init_parameters(hp, 8);
  jitter(params, 0.05, rng);
  const EventSequence seq = random_sequence(3, 6, 6.0, rng);
  auto integral = [&](int m) {
    HyperParameters h = hp;
    h.substeps = m;
    return sequence_loss(seq, params, h).integral;
  };
  double previous_change = std::abs(integral(8) - integral(4));
  for (int m : {8, 16, 32}) {
    const double change = std::abs(integral(2 * m) - integral(m));
    EXPECT_LT(change, previous_change) << "M=" << m;
    previous_change = change;
  }
  EXPECT_LT(previous_change / integral(64), 1e-3);
}

TEST(Likelihood, EmptySequenceIsRejected) {
  HyperParameters hp = default_hyperparameters(2);
  EventSequence seq;
  seq.horizon = 1.0;
  seq.allow_empty = true;
  EXPECT_MOCHA_ERROR(ErrorCode::EmptySequence, (void)nll(seq, init_parameters(hp, 1), hp));
}

}  // namespace
}  // namespace mocha
