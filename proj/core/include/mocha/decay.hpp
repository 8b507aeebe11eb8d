#pragma once

#include <Eigen/Dense>

#include "mocha/parameters.hpp"

namespace mocha {

/// Learned decay: sigmoid(W_fc2 relu(W_fc1 PE(dt) + b1) + b2) for dt > 0, and
/// exactly 0 for dt <= 0.
[[nodiscard]] double decay(double dt, const ModelParameters& params);

/// Forward activations kept for the backward pass.
struct DecayCache {
  double dt{0.0};
  double value{0.0};
  Eigen::VectorXd input;   ///< PE(dt)
  Eigen::VectorXd hidden;  ///< pre-activation W_fc1 PE(dt) + b1
};

double decay_forward(double dt, const ModelParameters& params, DecayCache& cache);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(kappa). Zero on
/// the clamped branch.
void decay_backward(const DecayCache& cache, const ModelParameters& params, double d_value,
                    ModelParameters& grad);

}  // namespace mocha
