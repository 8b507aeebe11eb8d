#include "mocha/encoding.hpp"

#include <cmath>

#include "mocha/error.hpp"

namespace mocha {

void positional_encoding(double x, std::span<double> out) {
  const std::size_t d = out.size() / 2;
  for (std::size_t i = 0; i < d; ++i) {
    const double exponent = static_cast<double>(i) / static_cast<double>(d);
    const double arg = x / std::pow(10000.0, exponent);
    out[i] = std::sin(arg);
    out[i + d] = std::cos(arg);
  }
}

Eigen::VectorXd positional_encoding(double x, int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "encoding half-dimension must be >= 1");
  Eigen::VectorXd out(2 * d);
  positional_encoding(x, std::span(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

TypeStateAtTime type_state(std::span<const Event> history, double t, int K) {
  TypeStateAtTime state;
  state.t = t;
  state.t_last.assign(static_cast<std::size_t>(K), std::nullopt);
  for (const Event& e : history) state.t_last[static_cast<std::size_t>(e.k)] = e.t;
  state.tau.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto& last = state.t_last[static_cast<std::size_t>(k)];
    state.tau(k) = last ? t - *last : t;
  }
  return state;
}

Eigen::MatrixXd build_embeddings(const TypeStateAtTime& state, const ModelParameters& params) {
  const int K = params.K();
  const int e = params.embedding_dim();
  Eigen::MatrixXd H(K, e);
  Eigen::VectorXd pe(e);
  for (int k = 0; k < K; ++k) {
    positional_encoding(state.tau(k), std::span(pe.data(), static_cast<std::size_t>(e)));
    H.row(k) = pe.transpose() + params.E_type.row(k);
  }
  return H;
}

}  // namespace mocha
