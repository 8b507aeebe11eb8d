#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "mocha/hyperparameters.hpp"

namespace mocha {

/// All learnable tensors. Positive quantities (base rates and order weights)
/// are stored as softplus pre-activations.
struct ModelParameters {
  Eigen::VectorXd mu_raw;     ///< K
  Eigen::MatrixXd alpha_raw;  ///< K x L
  Eigen::MatrixXd E_type;     ///< K x 2d
  Eigen::MatrixXd W_Q;        ///< d_attn x 2d
  Eigen::MatrixXd W_K;        ///< d_attn x 2d
  Eigen::VectorXd a_attn;     ///< 2 d_attn, query half first
  Eigen::MatrixXd W_proj;     ///< K x 2d
  Eigen::MatrixXd W_fc1;      ///< hidden x 2d
  Eigen::VectorXd b1;         ///< hidden
  Eigen::RowVectorXd W_fc2;   ///< 1 x hidden
  double b2{0.0};

  [[nodiscard]] int K() const noexcept { return static_cast<int>(mu_raw.size()); }
  [[nodiscard]] int L() const noexcept { return static_cast<int>(alpha_raw.cols()); }
  [[nodiscard]] int embedding_dim() const noexcept { return static_cast<int>(E_type.cols()); }
  [[nodiscard]] int d_attn() const noexcept { return static_cast<int>(W_Q.rows()); }
  [[nodiscard]] int hidden() const noexcept { return static_cast<int>(b1.size()); }

  [[nodiscard]] double mu(int k) const;
  [[nodiscard]] double alpha(int k, int l) const;

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool all_finite() const;

  bool operator==(const ModelParameters& other) const;
};

/// Calls `fn(name, rows, cols, span)` for every tensor in a fixed order. The
/// span aliases the tensor storage (column-major for Eigen matrices).
template <class Params, class Fn>
void visit_tensors(Params& p, Fn&& fn) {
  auto view = [](auto& m) {
    return std::span(m.data(), static_cast<std::size_t>(m.size()));
  };
  fn(std::string_view("mu_raw"), p.mu_raw.rows(), p.mu_raw.cols(), view(p.mu_raw));
  fn(std::string_view("alpha_raw"), p.alpha_raw.rows(), p.alpha_raw.cols(), view(p.alpha_raw));
  fn(std::string_view("E_type"), p.E_type.rows(), p.E_type.cols(), view(p.E_type));
  fn(std::string_view("W_Q"), p.W_Q.rows(), p.W_Q.cols(), view(p.W_Q));
  fn(std::string_view("W_K"), p.W_K.rows(), p.W_K.cols(), view(p.W_K));
  fn(std::string_view("a_attn"), p.a_attn.rows(), p.a_attn.cols(), view(p.a_attn));
  fn(std::string_view("W_proj"), p.W_proj.rows(), p.W_proj.cols(), view(p.W_proj));
  fn(std::string_view("W_fc1"), p.W_fc1.rows(), p.W_fc1.cols(), view(p.W_fc1));
  fn(std::string_view("b1"), p.b1.rows(), p.b1.cols(), view(p.b1));
  fn(std::string_view("W_fc2"), p.W_fc2.rows(), p.W_fc2.cols(), view(p.W_fc2));
  fn(std::string_view("b2"), Eigen::Index{1}, Eigen::Index{1}, std::span(&p.b2, 1));
}

/// Zero-valued parameters with the shapes implied by `hp`.
[[nodiscard]] ModelParameters zero_parameters(const HyperParameters& hp);

inline constexpr double kInitialDecayBias = -3.0;

/// Deterministic in (hp, seed). Matrices are N(0, 1/fan_in); b1 starts at 0 and
/// b2 at kInitialDecayBias; base rates start at 0.1 and order weights at 1.
[[nodiscard]] ModelParameters init_parameters(const HyperParameters& hp, std::uint64_t seed);

/// Throws Error(ShapeMismatch) unless every tensor matches `hp`.
void check_shapes(const ModelParameters& params, const HyperParameters& hp);

/// target += scale * source, tensor by tensor.
void axpy(double scale, const ModelParameters& source, ModelParameters& target);

[[nodiscard]] inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

[[nodiscard]] inline double softplus_inverse(double y) noexcept {
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

[[nodiscard]] inline double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace mocha
