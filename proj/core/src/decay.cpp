#include "mocha/decay.hpp"

#include <span>

#include "mocha/encoding.hpp"

namespace mocha {

double decay_forward(double dt, const ModelParameters& params, DecayCache& cache) {
  cache.dt = dt;
  if (dt <= 0.0) {
    cache.value = 0.0;
    return 0.0;
  }
  const int e = params.embedding_dim();
  cache.input.resize(e);
  positional_encoding(dt, std::span(cache.input.data(), static_cast<std::size_t>(e)));
  cache.hidden.noalias() = params.W_fc1 * cache.input;
  cache.hidden += params.b1;
  double z = params.b2;
  for (Eigen::Index j = 0; j < cache.hidden.size(); ++j) {
    if (cache.hidden(j) > 0.0) z += params.W_fc2(j) * cache.hidden(j);
  }
  cache.value = logistic(z);
  return cache.value;
}

double decay(double dt, const ModelParameters& params) {
  DecayCache cache;
  return decay_forward(dt, params, cache);
}

void decay_backward(const DecayCache& cache, const ModelParameters& params, double d_value,
                    ModelParameters& grad) {
  if (cache.dt <= 0.0 || d_value == 0.0) return;
  const double dz = d_value * cache.value * (1.0 - cache.value);
  grad.b2 += dz;
  for (Eigen::Index j = 0; j < cache.hidden.size(); ++j) {
    const double h = cache.hidden(j);
    if (h <= 0.0) continue;
    grad.W_fc2(j) += dz * h;
    const double dh = dz * params.W_fc2(j);
    grad.b1(j) += dh;
    grad.W_fc1.row(j) += dh * cache.input.transpose();
  }
}

}  // namespace mocha
