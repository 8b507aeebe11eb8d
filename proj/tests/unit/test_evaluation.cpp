#include <gtest/gtest.h>

#include <cmath>

#include "mocha/evaluation.hpp"
#include "mocha/likelihood.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::jitter;
using testing::random_sequence;

ModelParameters poisson_model(const HyperParameters& hp, double mu_raw) {
  ModelParameters p = init_parameters(hp, 2);
  p.W_proj.setZero();
  p.mu_raw.setConstant(mu_raw);
  return p;
}

// Static model whose W has identical rows W_proj * e_0: the attention is
// uniform (a = 0) and every type embedding equals e_0.
ModelParameters column_model(const HyperParameters& hp, const Eigen::VectorXd& column_weights) {
  ModelParameters p = init_parameters(hp, 3);
  p.a_attn.setZero();
  p.E_type.setZero();
  p.E_type.col(0).setOnes();
  p.W_proj.setZero();
  p.W_proj.col(0) = column_weights;
  return p;
}

// Expected next time from a 100x finer Simpson rule on the same density.
double expected_time_oracle(const IntensityEvaluator& ev, double cap, int grid) {
  const double t0 = ev.history().empty() ? 0.0 : ev.history().back().t;
  const int n = 2 * grid;
  const double h = cap / n;
  std::vector<double> lambda(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) lambda[static_cast<std::size_t>(i)] = ev.total(t0 + i * h);
  std::vector<double> Lambda(lambda.size(), 0.0);
  for (std::size_t i = 1; i < lambda.size(); ++i) {
    Lambda[i] = Lambda[i - 1] + 0.5 * h * (lambda[i - 1] + lambda[i]);
  }
  double mass = 0.0, moment = 0.0;
  for (int i = 0; i <= n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double p = lambda[u] * std::exp(-Lambda[u]);
    mass += w * p;
    moment += w * i * h * p;
  }
  return t0 + moment / mass;
}

TEST(Prediction, PoissonMeanGap) {
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = poisson_model(hp, 0.2);
  const double rate = 3.0 * (softplus(softplus(0.2)) + hp.epsilon);
  IntensityEvaluator ev(params, hp);
  ev.push({1.0, 0});
  const Prediction p = next_event_prediction(ev, 40.0 / rate, 4000);
  EXPECT_NEAR(p.time - 1.0, 1.0 / rate, 1e-4 / rate);
  EXPECT_FALSE(p.truncated);
  EXPECT_EQ(p.type, 0);  // all tied, smallest index
}

TEST(Prediction, DominantTypeWins) {
  HyperParameters hp = default_hyperparameters(3);
  ModelParameters params = poisson_model(hp, 0.0);
  params.mu_raw(2) = 3.0;
  IntensityEvaluator ev(params, hp);
  EXPECT_EQ(next_event_prediction(ev, 20.0).type, 2);
}

TEST(Prediction, MatchesRefinedQuadrature) {
  std::mt19937_64 rng(5);
  HyperParameters hp = default_hyperparameters(3);
  hp.L = 2;
  ModelParameters params = init_parameters(hp, 5);
  jitter(params, 0.1, rng);
  const EventSequence seq = random_sequence(3, 5, 3.0, rng);
  IntensityEvaluator ev(params, hp);
  for (const Event& e : seq.events) ev.push(e);
  const double cap = 12.0;
  const double oracle = expected_time_oracle(ev, cap, 40000);
  const double t0 = seq.events.back().t;
  auto error = [&](int grid) {
    return std::abs(next_event_prediction(ev, cap, grid).time - oracle) / (oracle - t0);
  };
  const double coarse = error(400);
  const double fine = error(1600);
  EXPECT_LT(coarse, 5e-3);
  EXPECT_LT(fine, 5e-4);
  EXPECT_LT(fine, coarse / 3.0);
}

TEST(Prediction, ShortCapIsFlagged) {
  HyperParameters hp = default_hyperparameters(2);
  IntensityEvaluator ev(poisson_model(hp, 0.0), hp);
  const Prediction p = next_event_prediction(ev, 0.1);
  EXPECT_TRUE(p.truncated);
  EXPECT_GT(p.tail_mass, 0.05);
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, (void)next_event_prediction(ev, 0.0));
}

TEST(Metrics, PerfectPredictions) {
  const std::vector<Event> truth{{1.0, 0}, {2.5, 2}, {4.0, 1}};
  std::vector<Prediction> preds;
  for (const Event& e : truth) preds.push_back({e.t, e.k, false, 0.0});
  Metrics m;
  score_predictions(preds, truth, m);
  EXPECT_DOUBLE_EQ(m.rmse, 0.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);

  preds[1].time = 3.5;
  preds[2].type = 0;
  score_predictions(preds, truth, m);
  EXPECT_NEAR(m.rmse, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(m.accuracy, 2.0 / 3.0, 1e-12);
}

TEST(Metrics, CountsAndNll) {
  std::mt19937_64 rng(6);
  HyperParameters hp = default_hyperparameters(3);
  const ModelParameters params = init_parameters(hp, 6);
  std::vector<EventSequence> corpus;
  for (int s = 0; s < 4; ++s) corpus.push_back(random_sequence(3, 5, 4.0, rng, "s" + std::to_string(s)));
  PredictionOptions options;
  options.grid = 100;
  const Metrics m = evaluate_metrics(corpus, params, hp, options);
  std::size_t events = 0;
  double total = 0.0;
  for (const auto& seq : corpus) {
    events += seq.size();
    total += nll(seq, params, hp);
  }
  EXPECT_EQ(m.events, events);
  EXPECT_EQ(m.sequences, 4u);
  EXPECT_EQ(m.predictions, events - 4);
  EXPECT_NEAR(m.nll_per_event, total / static_cast<double>(events), 1e-12);
  EXPECT_NEAR(m.nll_per_sequence, total / 4.0, 1e-12);
}

TEST(PathMatching, ConstructedWeights) {
  HyperParameters hp = default_hyperparameters(3);
  hp.variant = Variant::MultiOrderStatic;
  Eigen::VectorXd cols(3);
  cols << 0.0, 5.0, 5.0;
  std::mt19937_64 rng(7);
  const std::vector<EventSequence> corpus{random_sequence(3, 20, 10.0, rng)};
  const std::vector<GroundTruthPath> paths{{{0, 1, 2}, "0>1>2"}, {{1, 0}, "1>0"}};

  auto rates = path_matching_rate(corpus, column_model(hp, cols), hp, paths);
  EXPECT_DOUBLE_EQ(rates[0].rate(), 1.0);
  EXPECT_DOUBLE_EQ(rates[1].rate(), 0.0);
  std::size_t twos = 0;
  for (const Event& e : corpus[0].events) twos += e.k == 2;
  EXPECT_EQ(rates[0].occurrences, twos);

  cols(2) = 0.0;  // drops every edge into type 2
  rates = path_matching_rate(corpus, column_model(hp, cols), hp, paths);
  EXPECT_DOUBLE_EQ(rates[0].rate(), 0.0);
}

TEST(PathMatching, LowerThresholdNeverLowersRate) {
  std::mt19937_64 rng(8);
  HyperParameters hp = default_hyperparameters(4);
  ModelParameters params = init_parameters(hp, 8);
  jitter(params, 0.5, rng);
  std::vector<EventSequence> corpus;
  for (int s = 0; s < 3; ++s) corpus.push_back(random_sequence(4, 12, 6.0, rng));
  const std::vector<GroundTruthPath> paths{{{0, 1}, "a"}, {{2, 3, 1}, "b"}, {{3, 0, 2}, "c"}};
  std::vector<double> previous(paths.size(), -1.0);
  for (double theta : {0.95, 0.8, 0.6, 0.4, 0.2, 0.05, 0.0}) {
    hp.theta = theta;
    const auto rates = path_matching_rate(corpus, params, hp, paths);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      EXPECT_GE(rates[i].rate(), previous[i]);
      previous[i] = rates[i].rate();
    }
  }
}

TEST(PathMatching, RejectsBadPath) {
  HyperParameters hp = default_hyperparameters(3);
  const std::vector<EventSequence> corpus{EventSequence{"s", 1.0, {{0.5, 0}}, false}};
  const std::vector<GroundTruthPath> too_short{{{1}, "x"}};
  const std::vector<GroundTruthPath> out_of_range{{{0, 3}, "y"}};
  const ModelParameters params = init_parameters(hp, 1);
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, (void)path_matching_rate(corpus, params, hp, too_short));
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, (void)path_matching_rate(corpus, params, hp, out_of_range));
}

TEST(EdgeAuc, IndicatorAndReversal) {
  Eigen::MatrixXd planted = Eigen::MatrixXd::Zero(3, 3);
  planted(0, 1) = 1.0;
  planted(1, 2) = 0.7;
  Eigen::MatrixXd scores = (planted.array() > 0.0).cast<double>();
  scores.diagonal().setConstant(5.0);  // ignored
  EXPECT_DOUBLE_EQ(edge_auc(scores, planted), 1.0);
  EXPECT_DOUBLE_EQ(edge_auc(-scores, planted), 0.0);
  EXPECT_DOUBLE_EQ(edge_auc(Eigen::MatrixXd::Ones(3, 3), planted), 0.5);
}

TEST(EdgeAuc, ConstructedModel) {
  HyperParameters hp = default_hyperparameters(3);
  hp.variant = Variant::MultiOrderStatic;
  Eigen::VectorXd cols(3);
  cols << 0.0, 0.0, 4.0;
  PlantedGenerator g;
  g.K = 3;
  g.mu = {1.0, 1.0, 1.0};
  g.edges = {{0, 2, 1.0}, {1, 2, 1.0}};
  std::mt19937_64 rng(9);
  const std::vector<EventSequence> corpus{random_sequence(3, 10, 5.0, rng)};
  const std::vector<double> probes{1.0, 2.0, 9.0};
  const EdgeRecovery rec = edge_recovery_auc(column_model(hp, cols), hp, g, probes, corpus);
  EXPECT_DOUBLE_EQ(rec.auc, 1.0);
  EXPECT_NEAR(rec.scores(0, 2), edge_activation(4.0, hp.beta), 1e-12);
}

}  // namespace
}  // namespace mocha
