#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mocha/parameters.hpp"
#include "mocha/types.hpp"

namespace mocha {

/// Sinusoidal encoding of a scalar: entry i is sin(x / 10000^(i/d)) and entry
/// i + d is cos(x / 10000^(i/d)) for i in [0, d).
[[nodiscard]] Eigen::VectorXd positional_encoding(double x, int d);

/// Allocation-free form; `out` must hold 2d values.
void positional_encoding(double x, std::span<double> out);

/// Recency of every type at a query time.
struct TypeStateAtTime {
  double t{0.0};
  std::vector<std::optional<double>> t_last;  ///< nullopt for types not seen yet
  Eigen::VectorXd tau;  ///< t - t_last, or t itself for types not seen yet
};

/// Uses every event of `history`, which must all precede or coincide with t.
[[nodiscard]] TypeStateAtTime type_state(std::span<const Event> history, double t, int K);

/// H_t: row k is positional_encoding(tau_k) + E_type.row(k).
[[nodiscard]] Eigen::MatrixXd build_embeddings(const TypeStateAtTime& state,
                                               const ModelParameters& params);

}  // namespace mocha
