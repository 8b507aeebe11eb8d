#include <gtest/gtest.h>

#include "mocha/error.hpp"
#include "mocha/hyperparameters.hpp"
#include "mocha/parameters.hpp"
#include "mocha/types.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

EventSequence seq_of(std::vector<Event> events, double T = 10.0) {
  EventSequence s;
  s.id = "x";
  s.horizon = T;
  s.events = std::move(events);
  return s;
}

TEST(Sequence, AcceptsValid) {
  EXPECT_NO_THROW(validate_sequence(seq_of({{0.5, 0}, {1.0, 1}, {9.9, 0}}), 2));
}

TEST(Sequence, RejectsTiesAndDisorder) {
  EXPECT_MOCHA_ERROR(ErrorCode::NonMonotonicTime, validate_sequence(seq_of({{1.0, 0}, {1.0, 1}}), 2));
  EXPECT_MOCHA_ERROR(ErrorCode::NonMonotonicTime, validate_sequence(seq_of({{2.0, 0}, {1.0, 1}}), 2));
}

TEST(Sequence, RejectsTypeOutOfRange) {
  EXPECT_MOCHA_ERROR(ErrorCode::TypeOutOfRange, validate_sequence(seq_of({{1.0, 2}}), 2));
  EXPECT_MOCHA_ERROR(ErrorCode::TypeOutOfRange, validate_sequence(seq_of({{1.0, -1}}), 2));
}

TEST(Sequence, RejectsHorizonProblems) {
  EXPECT_MOCHA_ERROR(ErrorCode::HorizonViolation, validate_sequence(seq_of({{11.0, 0}}), 2));
  EXPECT_MOCHA_ERROR(ErrorCode::HorizonViolation, validate_sequence(seq_of({{-0.5, 0}}), 2));
  EXPECT_MOCHA_ERROR(ErrorCode::HorizonViolation, validate_sequence(seq_of({{0.5, 0}}, 0.0), 2));
}

TEST(Sequence, EmptyNeedsOptIn) {
  EventSequence s = seq_of({});
  EXPECT_MOCHA_ERROR(ErrorCode::EmptySequence, validate_sequence(s, 2));
  s.allow_empty = true;
  EXPECT_NO_THROW(validate_sequence(s, 2));
}

TEST(Sequence, CorpusHelpers) {
  const std::vector<EventSequence> corpus{seq_of({{1.0, 0}, {3.0, 4}}), seq_of({{2.0, 1}})};
  EXPECT_EQ(infer_type_count(corpus), 5);
  EXPECT_DOUBLE_EQ(mean_inter_event_gap(corpus), (1.0 + 2.0 + 2.0) / 3.0);
  const auto scaled = rescale_time(corpus, 0.5);
  EXPECT_DOUBLE_EQ(scaled[0].events[1].t, 1.5);
  EXPECT_DOUBLE_EQ(scaled[0].horizon, 5.0);
  EXPECT_EQ(scaled[0].events[1].k, 4);
}

TEST(Error, CodeNamesAndPrefix) {
  const Error e(ErrorCode::BoundViolation, "too big");
  EXPECT_EQ(e.code(), ErrorCode::BoundViolation);
  EXPECT_EQ(to_string(ErrorCode::NonMonotonicTime), "NON_MONOTONIC_TIME");
  EXPECT_NE(std::string(e.what()).find("BOUND_VIOLATION"), std::string::npos);
}

TEST(HyperParameters, Defaults) {
  const HyperParameters hp = default_hyperparameters(5);
  EXPECT_EQ(hp.K, 5);
  EXPECT_EQ(hp.d, 8);
  EXPECT_EQ(hp.d_attn, 8);
  EXPECT_EQ(hp.hidden, 16);
  EXPECT_EQ(hp.L, 3);
  EXPECT_DOUBLE_EQ(hp.beta, 1.0);
  EXPECT_DOUBLE_EQ(hp.theta, 0.5);
  EXPECT_DOUBLE_EQ(hp.gamma_acyclic, 0.1);
  EXPECT_DOUBLE_EQ(hp.gamma_sparse, 0.01);
  EXPECT_EQ(hp.substeps, 10);
  EXPECT_DOUBLE_EQ(hp.epsilon, 1e-9);
  EXPECT_EQ(hp.variant, Variant::FullDynamic);
  EXPECT_EQ(default_hyperparameters(2).L, 1);
}

TEST(HyperParameters, Validation) {
  HyperParameters hp = default_hyperparameters(3);
  hp.L = 3;
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, hp.validate());
  hp = default_hyperparameters(3);
  hp.beta = 0.0;
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, hp.validate());
  hp = default_hyperparameters(3);
  hp.substeps = 0;
  EXPECT_MOCHA_ERROR(ErrorCode::InvalidArgument, hp.validate());
}

TEST(HyperParameters, VariantNames) {
  for (Variant v : {Variant::HawkesUni, Variant::HawkesMulti, Variant::MultiOrderStatic,
                    Variant::FullDynamic}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_FALSE(parse_variant("NOPE").has_value());
  HyperParameters hp = default_hyperparameters(4);
  hp.variant = Variant::HawkesMulti;
  EXPECT_EQ(hp.effective_order(), 1);
  hp.variant = Variant::MultiOrderStatic;
  EXPECT_EQ(hp.effective_order(), 3);
}

TEST(Parameters, InitIsDeterministicAndShaped) {
  const HyperParameters hp = default_hyperparameters(4);
  const ModelParameters a = init_parameters(hp, 9);
  const ModelParameters b = init_parameters(hp, 9);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == init_parameters(hp, 10));
  EXPECT_NO_THROW(check_shapes(a, hp));
  EXPECT_NEAR(a.mu(0), 0.1, 1e-12);
  EXPECT_NEAR(a.alpha(2, 1), 1.0, 1e-12);
  EXPECT_EQ(a.E_type.rows(), 4);
  EXPECT_EQ(a.E_type.cols(), 16);
  EXPECT_EQ(a.W_fc2.cols(), 16);
}

TEST(Parameters, ShapeMismatch) {
  HyperParameters hp = default_hyperparameters(4);
  const ModelParameters p = init_parameters(hp, 1);
  hp.K = 5;
  hp.L = 2;
  EXPECT_MOCHA_ERROR(ErrorCode::ShapeMismatch, check_shapes(p, hp));
}

TEST(Parameters, SoftplusInverse) {
  for (double y : {1e-6, 0.1, 1.0, 5.0, 40.0}) {
    EXPECT_NEAR(softplus(softplus_inverse(y)), y, 1e-10 * std::max(1.0, y));
  }
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
}

TEST(Parameters, AxpyAndCount) {
  const HyperParameters hp = default_hyperparameters(3);
  ModelParameters p = init_parameters(hp, 2);
  const ModelParameters q = p;
  axpy(-1.0, q, p);
  double total = 0.0;
  visit_tensors(p, [&](std::string_view, Eigen::Index, Eigen::Index, std::span<const double> v) {
    for (double x : v) total += std::abs(x);
  });
  EXPECT_EQ(total, 0.0);
  const std::size_t expected = 3 + 3 * 2 + 3 * 16 + 2 * 8 * 16 + 16 + 3 * 16 + 16 * 16 + 16 + 16 + 1;
  EXPECT_EQ(q.parameter_count(), expected);
}

}  // namespace
}  // namespace mocha
