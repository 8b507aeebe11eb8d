#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mocha/hyperparameters.hpp"
#include "mocha/parameters.hpp"
#include "mocha/types.hpp"

namespace mocha {

struct LossBreakdown {
  double nll{0.0};
  double acyclic{0.0};
  double sparse{0.0};
  double total{0.0};  ///< ((nll + acyclic) + sparse)
  double log_intensity{0.0};  ///< sum_i log lambda_{k_i}(t_i)
  double integral{0.0};       ///< sum_k integral_0^T lambda_k by trapezoid

  void finalize() noexcept { total = nll + acyclic + sparse; }
};

/// Negative log-likelihood of one sequence. The compensator is integrated by
/// the trapezoid rule over hp.substeps sub-intervals of every inter-event
/// interval (including [0, t_1] and [t_N, T]); each interval uses the history
/// up to its left end, so left and right limits at event times are both exact.
[[nodiscard]] double nll(const EventSequence& seq, const ModelParameters& params,
                         const HyperParameters& hp);

/// (gamma_acyclic * sum_i h(W_{t_i}), gamma_sparse * sum_i |W_{t_i}|_1) with
/// W_{t_i} built from the history strictly before each event.
[[nodiscard]] std::pair<double, double> regularizers(const EventSequence& seq,
                                                     const ModelParameters& params,
                                                     const HyperParameters& hp);

/// Complete per-sequence objective. When `grad` is non-null the exact
/// gradient of `total` is accumulated into it.
LossBreakdown sequence_loss(const EventSequence& seq, const ModelParameters& params,
                            const HyperParameters& hp, ModelParameters* grad = nullptr);

/// Mean over the batch of per-sequence objectives (forward only).
[[nodiscard]] LossBreakdown batch_loss(std::span<const EventSequence> batch,
                                       const ModelParameters& params, const HyperParameters& hp);

/// Mean objective and its exact gradient. Throws NonFiniteLoss.
[[nodiscard]] std::pair<LossBreakdown, ModelParameters> loss_and_gradient(
    std::span<const EventSequence> batch, const ModelParameters& params,
    const HyperParameters& hp);

struct TensorCheck {
  std::string name;
  double relative_error{0.0};
  double analytic_norm{0.0};
  double numeric_norm{0.0};
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double worst{0.0};
  std::size_t refined{0};  ///< coordinates re-differenced at a smaller step
  [[nodiscard]] bool passed(double tolerance) const noexcept { return worst < tolerance; }
};

/// Compares the analytic gradient of the batch objective with central finite
/// differences, tensor by tensor: |g_a - g_fd| / max(|g_a|, |g_fd|, floor) in
/// the Euclidean norm, where floor is 1e-4 of the whole gradient's norm.
/// Coordinates whose step-h difference disagrees with a sequence of smaller
/// steps that agree among themselves sit near a kink and use the smaller step.
[[nodiscard]] GradientCheckReport check_gradients(std::span<const EventSequence> batch,
                                                  const ModelParameters& params,
                                                  const HyperParameters& hp, double step = 1e-4);

}  // namespace mocha
