#include "mocha/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mocha/decay.hpp"
#include "mocha/encoding.hpp"
#include "mocha/error.hpp"

namespace mocha {

double first_order_influence(int u, int v, double gap, const StructuralWeights& Wt,
                             const ModelParameters& params) {
  return Wt.W(u, v) * decay(gap, params);
}

double chain_influence(std::span<const Event> chain, const StructuralWeights& Wt,
                       const ModelParameters& params) {
  if (chain.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a chain needs a source event and a query point");
  }
  double product = 1.0;
  for (std::size_t r = 1; r < chain.size(); ++r) {
    if (!(chain[r].t > chain[r - 1].t)) {
      std::ostringstream msg;
      msg << "chain hop " << r << " goes from t=" << chain[r - 1].t << " to t=" << chain[r].t;
      throw Error(ErrorCode::NonIncreasingChain, msg.str());
    }
    product *= Wt.W(chain[r - 1].k, chain[r].k) * decay(chain[r].t - chain[r - 1].t, params);
  }
  return product;
}

namespace {

// Enumerates chains by choosing strictly later events one at a time.
double enumerate_chains(std::span<const Event> history, std::vector<Event>& chain,
                        std::size_t next, int remaining, const Event& query,
                        const StructuralWeights& Wt, const ModelParameters& params) {
  if (remaining == 0) {
    chain.push_back(query);
    const double value = chain_influence(chain, Wt, params);
    chain.pop_back();
    return value;
  }
  double total = 0.0;
  for (std::size_t j = next; j < history.size(); ++j) {
    if (!chain.empty() && !(history[j].t > chain.back().t)) continue;
    if (!(history[j].t < query.t)) continue;
    chain.push_back(history[j]);
    total += enumerate_chains(history, chain, j + 1, remaining - 1, query, Wt, params);
    chain.pop_back();
  }
  return total;
}

}  // namespace

double order_intensity_bruteforce(std::span<const Event> history, double t, int k, int l,
                                  const StructuralWeights& Wt, const ModelParameters& params) {
  if (l < 1) throw Error(ErrorCode::InvalidArgument, "order must be >= 1");
  std::vector<Event> chain;
  chain.reserve(static_cast<std::size_t>(l) + 1);
  return enumerate_chains(history, chain, 0, l, Event{t, k}, Wt, params);
}

void terminal_orders(std::span<const Event> window, const Eigen::Ref<const Eigen::MatrixXd>& S,
                     const Eigen::MatrixXd& W, std::span<const double> terminal,
                     Eigen::MatrixXd& orders) {
  const Eigen::Index L = S.rows();
  const Eigen::Index K = W.rows();
  orders.setZero(L, K);
  for (std::size_t j = 0; j < window.size(); ++j) {
    const double kappa = terminal[j];
    if (kappa == 0.0) continue;
    const auto row = W.row(window[j].k);
    for (Eigen::Index l = 0; l < L; ++l) {
      const double s = S(l, static_cast<Eigen::Index>(j)) * kappa;
      if (s != 0.0) orders.row(l) += s * row;
    }
  }
}

void terminal_orders_backward(std::span<const Event> window,
                              const Eigen::Ref<const Eigen::MatrixXd>& S, const Eigen::MatrixXd& W,
                              std::span<const double> terminal, const Eigen::MatrixXd& d_orders,
                              Eigen::Ref<Eigen::MatrixXd> dS, Eigen::MatrixXd& dW,
                              std::span<double> d_terminal) {
  const Eigen::Index L = S.rows();
  for (std::size_t j = 0; j < window.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const int kj = window[j].k;
    const double kappa = terminal[j];
    for (Eigen::Index l = 0; l < L; ++l) {
      const double through = d_orders.row(l).dot(W.row(kj));
      dS(l, jj) += through * kappa;
      d_terminal[j] += through * S(l, jj);
      const double s = S(l, jj) * kappa;
      if (s != 0.0) dW.row(kj) += s * d_orders.row(l);
    }
  }
}

Eigen::MatrixXd order_intensity_dp(std::span<const Event> history, double t, int L,
                                   const StructuralWeights& Wt, const ModelParameters& params) {
  const std::size_t n = history.size();
  PairDecayTable pairs;
  for (std::size_t j = 0; j < n; ++j) pairs.extend(history.first(j + 1), params);
  Eigen::MatrixXd S;
  chain_sums(history, pairs, Wt.W, L, S);
  std::vector<double> terminal(n);
  for (std::size_t j = 0; j < n; ++j) terminal[j] = decay(t - history[j].t, params);
  Eigen::MatrixXd orders;
  terminal_orders(history, S, Wt.W, terminal, orders);
  return orders;
}

IntensityBreakdown compose_intensity(double t, const Eigen::MatrixXd& orders,
                                     const ModelParameters& params, const HyperParameters& hp) {
  const int K = params.K();
  IntensityBreakdown out;
  out.t = t;
  out.lambda_by_order = orders;
  out.base.resize(K);
  out.lambda_linear.resize(K);
  out.lambda_total.resize(K);
  for (int k = 0; k < K; ++k) {
    out.base(k) = params.mu(k);
    double linear = out.base(k);
    for (Eigen::Index l = 0; l < orders.rows(); ++l) {
      linear += params.alpha(k, static_cast<int>(l)) * orders(l, k);
    }
    out.lambda_linear(k) = linear;
    out.lambda_total(k) = softplus(linear) + hp.epsilon;
  }
  return out;
}

std::span<const Event> history_window(std::span<const Event> history, const HyperParameters& hp) {
  if (hp.max_history > 0 && history.size() > static_cast<std::size_t>(hp.max_history)) {
    return history.last(static_cast<std::size_t>(hp.max_history));
  }
  return history;
}

IntensityBreakdown total_intensity(std::span<const Event> history, double t,
                                   const StructuralWeights& Wt, const ModelParameters& params,
                                   const HyperParameters& hp) {
  const auto window = history_window(history, hp);
  return compose_intensity(t, order_intensity_dp(window, t, hp.effective_order(), Wt, params),
                           params, hp);
}

Eigen::MatrixXd query_embeddings(std::span<const Event> history, double t,
                                 const ModelParameters& params, const HyperParameters& hp) {
  if (!hp.dynamic_weights()) return params.E_type;
  return build_embeddings(type_state(history, t, params.K()), params);
}

void apply_variant_mask(Eigen::MatrixXd& W, const HyperParameters& hp) {
  if (hp.variant != Variant::HawkesUni) return;
  const Eigen::VectorXd diagonal = W.diagonal();
  W.setZero();
  W.diagonal() = diagonal;
}

StructuralWeights query_weights(std::span<const Event> history, double t,
                                const ModelParameters& params, const HyperParameters& hp) {
  StructuralWeights Wt = structural_weights(query_embeddings(history, t, params, hp), params);
  Wt.t = t;
  apply_variant_mask(Wt.W, hp);
  if (hp.dag_mask) {
    for (Eigen::Index u = 0; u < Wt.W.rows(); ++u) {
      for (Eigen::Index v = 0; v < Wt.W.cols(); ++v) {
        if (!(edge_activation(Wt.W(u, v), hp.beta) > hp.theta)) Wt.W(u, v) = 0.0;
      }
    }
  }
  return Wt;
}

void PairDecayTable::extend(std::span<const Event> events, const ModelParameters& params) {
  const std::size_t j = count_;
  const double tj = events[j].t;
  for (std::size_t i = 0; i < j; ++i) values_.push_back(decay(tj - events[i].t, params));
  ++count_;
}

IntensityEvaluator::IntensityEvaluator(ModelParameters params, HyperParameters hp)
    : params_(std::move(params)), hp_(std::move(hp)) {
  hp_.validate();
  check_shapes(params_, hp_);
}

void IntensityEvaluator::reset() {
  events_.clear();
  pairs_.clear();
}

void IntensityEvaluator::push(const Event& e) {
  if (!events_.empty() && !(e.t > events_.back().t)) {
    throw Error(ErrorCode::NonMonotonicTime, "pushed event does not follow the history");
  }
  if (e.k < 0 || e.k >= params_.K()) {
    throw Error(ErrorCode::TypeOutOfRange, "pushed event type outside the model");
  }
  events_.push_back(e);
  if (hp_.effective_order() > 1) pairs_.extend(events_, params_);
}

StructuralWeights IntensityEvaluator::weights(double t) const {
  return query_weights(events_, t, params_, hp_);
}

IntensityBreakdown IntensityEvaluator::evaluate(double t) const {
  const StructuralWeights Wt = weights(t);
  const auto window = history_window(events_, hp_);
  const std::size_t offset = events_.size() - window.size();
  const int L = hp_.effective_order();

  Eigen::MatrixXd S;
  chain_sums(window, [&](std::size_t i, std::size_t j) { return pairs_(i + offset, j + offset); },
             Wt.W, L, S);
  std::vector<double> terminal(window.size());
  DecayCache cache;
  for (std::size_t j = 0; j < window.size(); ++j) {
    terminal[j] = decay_forward(t - window[j].t, params_, cache);
  }
  Eigen::MatrixXd orders;
  terminal_orders(window, S, Wt.W, terminal, orders);
  return compose_intensity(t, orders, params_, hp_);
}

double IntensityEvaluator::upper_bound(double t, double lookahead) const {
  if (!(lookahead >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative bound lookahead");
  const auto window = history_window(events_, hp_);
  const std::size_t offset = events_.size() - window.size();
  const int L = hp_.effective_order();

  // Static variants have one W; the dynamic one drifts with the clock.
  const int probes = hp_.dynamic_weights() ? kBoundProbes : 1;
  Eigen::MatrixXd bound_w = weights(t).W.cwiseAbs();
  for (int p = 1; p < probes; ++p) {
    bound_w = bound_w.cwiseMax(weights(t + lookahead * p / (probes - 1)).W.cwiseAbs());
  }

  std::vector<double> terminal(window.size(), 0.0);
  DecayCache cache;
  for (std::size_t j = 0; j < window.size(); ++j) {
    const double gap = t - window[j].t;
    for (int p = 0; p < kBoundProbes; ++p) {
      const double g = gap + lookahead * p / (kBoundProbes - 1);
      terminal[j] = std::max(terminal[j], decay_forward(g, params_, cache));
    }
  }

  Eigen::MatrixXd S;
  chain_sums(window, [&](std::size_t i, std::size_t j) { return pairs_(i + offset, j + offset); },
             bound_w, L, S);
  Eigen::MatrixXd orders;
  terminal_orders(window, S, bound_w, terminal, orders);
  return kBoundSafety * compose_intensity(t, orders, params_, hp_).lambda_total.sum();
}

}  // namespace mocha
