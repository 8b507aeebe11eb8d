#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mocha/graph.hpp"
#include "mocha/hyperparameters.hpp"
#include "mocha/parameters.hpp"
#include "mocha/types.hpp"

namespace mocha {

struct IntensityBreakdown {
  double t{0.0};
  Eigen::VectorXd lambda_total;     ///< K, softplus(lambda_linear) + epsilon
  Eigen::VectorXd lambda_linear;    ///< K, mu + sum_l alpha^(l) lambda^(l)
  Eigen::MatrixXd lambda_by_order;  ///< effective order x K
  Eigen::VectorXd base;             ///< K, mu
};

/// W_t[u, v] * decay(gap).
[[nodiscard]] double first_order_influence(int u, int v, double gap, const StructuralWeights& Wt,
                                           const ModelParameters& params);

/// Product over consecutive hops of W_t[k_prev, k_next] * decay(t_next - t_prev).
/// The last element is the query point. Throws NonIncreasingChain.
[[nodiscard]] double chain_influence(std::span<const Event> chain, const StructuralWeights& Wt,
                                     const ModelParameters& params);

/// Sum of chain_influence over every strictly time-increasing chain of `l`
/// history events whose last hop ends at (t, k). Exponential in l.
[[nodiscard]] double order_intensity_bruteforce(std::span<const Event> history, double t, int k,
                                                int l, const StructuralWeights& Wt,
                                                const ModelParameters& params);

/// All order intensities lambda_k^(l)(t), l = 1..L, as an L x K matrix, by
/// dynamic programming over chain sums in O(N^2 L).
[[nodiscard]] Eigen::MatrixXd order_intensity_dp(std::span<const Event> history, double t, int L,
                                                 const StructuralWeights& Wt,
                                                 const ModelParameters& params);

/// Combines order intensities into the breakdown (softplus positivity + eps).
[[nodiscard]] IntensityBreakdown compose_intensity(double t, const Eigen::MatrixXd& orders,
                                                   const ModelParameters& params,
                                                   const HyperParameters& hp);

/// Full intensity at t given `history` (events before t) and the supplied
/// W_t. Honors hp.max_history and the variant's order.
[[nodiscard]] IntensityBreakdown total_intensity(std::span<const Event> history, double t,
                                                 const StructuralWeights& Wt,
                                                 const ModelParameters& params,
                                                 const HyperParameters& hp);

/// The last hp.max_history events of `history` (all of them when unlimited).
[[nodiscard]] std::span<const Event> history_window(std::span<const Event> history,
                                                    const HyperParameters& hp);

/// Embedding input to the attention layer: PE(tau) + E_type for the dynamic
/// variant, E_type alone for static ones.
[[nodiscard]] Eigen::MatrixXd query_embeddings(std::span<const Event> history, double t,
                                               const ModelParameters& params,
                                               const HyperParameters& hp);

/// Zeroes off-diagonal entries for HAWKES_UNI (also used on adjoints).
void apply_variant_mask(Eigen::MatrixXd& W, const HyperParameters& hp);

/// W_t as the model uses it at query time t, including the variant mask and,
/// when hp.dag_mask is set, the thresholded-edge mask.
[[nodiscard]] StructuralWeights query_weights(std::span<const Event> history, double t,
                                              const ModelParameters& params,
                                              const HyperParameters& hp);

// ---------------------------------------------------------------------------
// Chain-sum kernels shared by inference and training.
//
// For a window of n history events, S(m, j) is the summed influence of all
// time-increasing chains of m + 1 window events ending at event j, excluding
// the final hop to the query point. S(0, j) = 1. `pair(i, j)` must return
// decay(t_j - t_i) for window indices i < j.

template <class PairDecay>
void chain_sums(std::span<const Event> window, const PairDecay& pair, const Eigen::MatrixXd& W,
                int L, Eigen::MatrixXd& S) {
  const auto n = static_cast<Eigen::Index>(window.size());
  S.resize(L, n);
  if (n == 0) return;
  S.row(0).setOnes();
  for (int m = 1; m < L; ++m) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const int kj = window[j].k;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < j; ++i) {
        const double prev = S(m - 1, i);
        if (prev != 0.0) acc += prev * W(window[i].k, kj) * pair(i, j);
      }
      S(m, j) = acc;
    }
  }
}

/// orders(l, k) = sum_j S(l, j) W(k_j, k) terminal(j).
void terminal_orders(std::span<const Event> window, const Eigen::Ref<const Eigen::MatrixXd>& S,
                     const Eigen::MatrixXd& W, std::span<const double> terminal,
                     Eigen::MatrixXd& orders);

/// Adjoint of terminal_orders: accumulates into dS, dW and d_terminal.
void terminal_orders_backward(std::span<const Event> window,
                              const Eigen::Ref<const Eigen::MatrixXd>& S, const Eigen::MatrixXd& W,
                              std::span<const double> terminal, const Eigen::MatrixXd& d_orders,
                              Eigen::Ref<Eigen::MatrixXd> dS, Eigen::MatrixXd& dW,
                              std::span<double> d_terminal);

/// Adjoint of chain_sums. Consumes dS (rows are modified) and accumulates into
/// dW and, through `d_pair(i, j, value)`, the pair-decay adjoints.
template <class PairDecay, class PairAdjoint>
void chain_sums_backward(std::span<const Event> window, const PairDecay& pair,
                         const Eigen::MatrixXd& W, const Eigen::MatrixXd& S, Eigen::MatrixXd& dS,
                         Eigen::MatrixXd& dW, PairAdjoint&& d_pair) {
  const auto n = static_cast<Eigen::Index>(window.size());
  for (Eigen::Index m = S.rows() - 1; m >= 1; --m) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = dS(m, j);
      if (g == 0.0) continue;
      const int kj = window[j].k;
      for (Eigen::Index i = 0; i < j; ++i) {
        const double prev = S(m - 1, i);
        const int ki = window[i].k;
        const double p = pair(i, j);
        const double w = W(ki, kj);
        dS(m - 1, i) += g * w * p;
        dW(ki, kj) += g * prev * p;
        d_pair(i, j, g * prev * w);
      }
    }
  }
}

/// Decays between every ordered pair of events, grown one event at a time.
class PairDecayTable {
 public:
  void clear() noexcept { values_.clear(); count_ = 0; }
  /// Adds the row for events[count] against all earlier events.
  void extend(std::span<const Event> events, const ModelParameters& params);
  [[nodiscard]] std::size_t size() const noexcept { return count_; }
  /// decay(t_j - t_i) for i < j.
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[j * (j - 1) / 2 + i];
  }

 private:
  std::vector<double> values_;
  std::size_t count_{0};
};

/// Intensity of a fixed model against a growing history. Used by simulation,
/// prediction and diagnostics; training has its own taped path.
class IntensityEvaluator {
 public:
  IntensityEvaluator(ModelParameters params, HyperParameters hp);

  void reset();
  /// Appends an event; its time must exceed every earlier event.
  void push(const Event& e);

  [[nodiscard]] std::span<const Event> history() const noexcept { return events_; }
  [[nodiscard]] const ModelParameters& params() const noexcept { return params_; }
  [[nodiscard]] const HyperParameters& hp() const noexcept { return hp_; }

  /// Intensity at t >= the last pushed event, conditioned on all pushed events.
  [[nodiscard]] IntensityBreakdown evaluate(double t) const;
  [[nodiscard]] StructuralWeights weights(double t) const;
  [[nodiscard]] double total(double t) const { return evaluate(t).lambda_total.sum(); }

  /// Thinning envelope for sum_k lambda_k over [t, t + lookahead] with no push
  /// in between: |W| and the terminal decay are replaced by their maxima over a
  /// probe grid of the window, then scaled by kBoundSafety. Heuristic for a
  /// learned kernel; the simulator checks every proposal against it.
  [[nodiscard]] double upper_bound(double t, double lookahead) const;

  static constexpr double kBoundSafety = 1.5;
  static constexpr int kBoundProbes = 8;

 private:
  ModelParameters params_;
  HyperParameters hp_;
  std::vector<Event> events_;
  PairDecayTable pairs_;
};

}  // namespace mocha
