#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mocha/hyperparameters.hpp"
#include "mocha/parameters.hpp"

namespace mocha {

/// W_t; entry (u, v) is the causal strength of type u on type v at time t.
struct StructuralWeights {
  double t{0.0};
  Eigen::MatrixXd W;
};

/// Thresholded snapshot of W_t with cycle diagnostics.
struct CausalGraph {
  double t{0.0};
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> A;
  bool is_dag{true};
  std::vector<std::pair<int, int>> cycle_edges;  ///< edges inside a cycle, row-major order
};

inline constexpr double kLeakyReluSlope = 0.2;

/// e_{u->v} = LeakyReLU(a . [W_Q h_u || W_K h_v]).
[[nodiscard]] Eigen::MatrixXd attention_scores(const Eigen::MatrixXd& H,
                                               const ModelParameters& params);

/// Intermediates of the attention layer kept for the backward pass.
struct AttentionCache {
  Eigen::MatrixXd H;         ///< K x 2d input
  Eigen::MatrixXd queries;   ///< K x d_attn, row u = W_Q h_u
  Eigen::MatrixXd keys;      ///< K x d_attn, row v = W_K h_v
  Eigen::MatrixXd logits;    ///< K x K pre-activation scores
  Eigen::MatrixXd weights;   ///< K x K attention, columns sum to one over sources
  Eigen::MatrixXd context;   ///< K x 2d, row v = sum_u eta_{u->v} h_u
};

/// Softmax over sources u for each target v, context vectors, and the stacked
/// projection W (row v = W_proj * context_v). Throws NumericOverflow when a
/// score is not finite.
[[nodiscard]] StructuralWeights structural_weights(const Eigen::MatrixXd& H,
                                                   const ModelParameters& params);
Eigen::MatrixXd structural_weights_forward(const Eigen::MatrixXd& H, const ModelParameters& params,
                                           AttentionCache& cache);

/// Accumulates parameter gradients from dW and returns d(loss)/dH.
Eigen::MatrixXd structural_weights_backward(const AttentionCache& cache,
                                            const ModelParameters& params,
                                            const Eigen::MatrixXd& dW, ModelParameters& grad);

/// 1 - exp(-beta |w|).
[[nodiscard]] double edge_activation(double w, double beta) noexcept;

[[nodiscard]] CausalGraph threshold_graph(const StructuralWeights& Wt, double beta, double theta);
[[nodiscard]] CausalGraph threshold_graph(const StructuralWeights& Wt, const HyperParameters& hp);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// A^l over the integers; entry (u, v) counts directed walks of length l.
[[nodiscard]] CountMatrix path_count_matrix(const CausalGraph& graph, int l);
[[nodiscard]] CountMatrix path_count_matrix(const CountMatrix& A, int l);

/// h(W) = Tr(exp(W o W)) - K by truncated Taylor series, with the gradient of
/// the truncated series.
struct AcyclicityResult {
  double value{0.0};
  Eigen::MatrixXd gradient;  ///< dh/dW
  int terms{0};              ///< number of series terms beyond the identity
};

[[nodiscard]] AcyclicityResult acyclicity(const Eigen::MatrixXd& W);
[[nodiscard]] double acyclicity_value(const StructuralWeights& Wt);

/// Entrywise l1 norm.
[[nodiscard]] double sparsity_value(const StructuralWeights& Wt);

}  // namespace mocha
