#include "mocha/likelihood.hpp"

#include <cmath>
#include <optional>

#include "mocha/decay.hpp"
#include "mocha/encoding.hpp"
#include "mocha/error.hpp"
#include "mocha/graph.hpp"
#include "mocha/intensity.hpp"

namespace mocha {

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

std::size_t pair_index(std::size_t i, std::size_t j) { return j * (j - 1) / 2 + i; }

// Forward evaluation of the objective with an optional reverse sweep. Every
// adjoint is accumulated in the same order on every call, so results are
// reproducible bit for bit.
class LossTape {
 public:
  LossTape(const EventSequence& seq, const ModelParameters& params, const HyperParameters& hp,
           ModelParameters* grad)
      : seq_(seq), params_(params), hp_(hp), grad_(grad) {
    hp_.dag_mask = false;
    events_ = seq_.events;
    N_ = events_.size();
    K_ = params_.K();
    L_ = hp_.effective_order();
  }

  LossBreakdown run();

 private:
  Eigen::MatrixXd weights_forward(double t, AttentionCache& cache);
  void weights_backward(const AttentionCache& cache, Eigen::MatrixXd dW);
  void regularize(const Eigen::MatrixXd& W, double multiplicity, LossBreakdown& out,
                  Eigen::MatrixXd* dW) const;
  void knot(double t, const Eigen::MatrixXd& W, std::span<const Event> window,
            const Eigen::Ref<const Eigen::MatrixXd>& S, double weight, int event_type,
            LossBreakdown& out);
  void knot_backward(std::span<const Event> window, const Eigen::Ref<const Eigen::MatrixXd>& S,
                     const Eigen::MatrixXd& W, Eigen::Ref<Eigen::MatrixXd> dS,
                     Eigen::MatrixXd& dW);

  const EventSequence& seq_;
  const ModelParameters& params_;
  HyperParameters hp_;
  ModelParameters* grad_;

  std::span<const Event> events_;
  std::size_t N_{0};
  int K_{0};
  int L_{1};

  std::vector<double> pair_value_;
  std::vector<double> pair_adjoint_;
  std::vector<DecayCache> pair_cache_;

  std::vector<std::optional<double>> last_;
  Eigen::VectorXd pe_;

  std::vector<double> terminal_;
  std::vector<double> d_terminal_;
  std::vector<DecayCache> terminal_cache_;
  Eigen::MatrixXd orders_;
  Eigen::MatrixXd d_orders_;
};

Eigen::MatrixXd LossTape::weights_forward(double t, AttentionCache& cache) {
  Eigen::MatrixXd H = params_.E_type;
  if (hp_.dynamic_weights()) {
    pe_.resize(params_.embedding_dim());
    for (int k = 0; k < K_; ++k) {
      const auto& last = last_[static_cast<std::size_t>(k)];
      positional_encoding(last ? t - *last : t,
                          std::span(pe_.data(), static_cast<std::size_t>(pe_.size())));
      H.row(k) += pe_.transpose();
    }
  }
  Eigen::MatrixXd W = structural_weights_forward(H, params_, cache);
  apply_variant_mask(W, hp_);
  return W;
}

void LossTape::weights_backward(const AttentionCache& cache, Eigen::MatrixXd dW) {
  apply_variant_mask(dW, hp_);
  grad_->E_type += structural_weights_backward(cache, params_, dW, *grad_);
}

void LossTape::regularize(const Eigen::MatrixXd& W, double multiplicity, LossBreakdown& out,
                          Eigen::MatrixXd* dW) const {
  if (hp_.gamma_acyclic > 0.0) {
    const AcyclicityResult h = acyclicity(W);
    out.acyclic += hp_.gamma_acyclic * multiplicity * h.value;
    if (dW) *dW += (hp_.gamma_acyclic * multiplicity) * h.gradient;
  }
  if (hp_.gamma_sparse > 0.0) {
    out.sparse += hp_.gamma_sparse * multiplicity * W.cwiseAbs().sum();
    if (dW) *dW += (hp_.gamma_sparse * multiplicity) * W.unaryExpr(&sign);
  }
}

void LossTape::knot(double t, const Eigen::MatrixXd& W, std::span<const Event> window,
                    const Eigen::Ref<const Eigen::MatrixXd>& S, double weight, int event_type,
                    LossBreakdown& out) {
  const std::size_t n = window.size();
  terminal_.resize(n);
  if (terminal_cache_.size() < n) terminal_cache_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    terminal_[j] = decay_forward(t - window[j].t, params_, terminal_cache_[j]);
  }
  terminal_orders(window, S, W, terminal_, orders_);

  if (grad_) d_orders_.setZero(L_, K_);
  double rate_sum = 0.0;
  for (int k = 0; k < K_; ++k) {
    double linear = params_.mu(k);
    for (int l = 0; l < L_; ++l) linear += params_.alpha(k, l) * orders_(l, k);
    const double lambda = softplus(linear) + hp_.epsilon;
    rate_sum += lambda;
    double d_lambda = weight;
    if (k == event_type) {
      out.log_intensity += std::log(lambda);
      d_lambda -= 1.0 / lambda;
    }
    if (!grad_ || d_lambda == 0.0) continue;
    const double d_linear = d_lambda * logistic(linear);
    grad_->mu_raw(k) += d_linear * logistic(params_.mu_raw(k));
    for (int l = 0; l < L_; ++l) {
      grad_->alpha_raw(k, l) += d_linear * orders_(l, k) * logistic(params_.alpha_raw(k, l));
      d_orders_(l, k) = d_linear * params_.alpha(k, l);
    }
  }
  out.integral += weight * rate_sum;
}

void LossTape::knot_backward(std::span<const Event> window,
                             const Eigen::Ref<const Eigen::MatrixXd>& S, const Eigen::MatrixXd& W,
                             Eigen::Ref<Eigen::MatrixXd> dS, Eigen::MatrixXd& dW) {
  const std::size_t n = window.size();
  d_terminal_.assign(n, 0.0);
  terminal_orders_backward(window, S, W, terminal_, d_orders_, dS, dW, d_terminal_);
  for (std::size_t j = 0; j < n; ++j) {
    decay_backward(terminal_cache_[j], params_, d_terminal_[j], *grad_);
  }
}

LossBreakdown LossTape::run() {
  LossBreakdown out;
  const bool want_grad = grad_ != nullptr;
  const bool dynamic = hp_.dynamic_weights();
  const bool frozen = dynamic && hp_.frozen_weights;
  const bool windowed = hp_.max_history > 0;
  const int M = hp_.substeps;

  if (L_ > 1 && N_ > 1) {
    const std::size_t pairs = N_ * (N_ - 1) / 2;
    pair_value_.resize(pairs);
    pair_cache_.resize(pairs);
    if (want_grad) pair_adjoint_.assign(pairs, 0.0);
    for (std::size_t j = 1; j < N_; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const std::size_t idx = pair_index(i, j);
        pair_value_[idx] = decay_forward(events_[j].t - events_[i].t, params_, pair_cache_[idx]);
      }
    }
  }

  AttentionCache static_cache;
  Eigen::MatrixXd W_static;
  Eigen::MatrixXd dW_static;
  last_.assign(static_cast<std::size_t>(K_), std::nullopt);
  if (!dynamic) {
    W_static = weights_forward(0.0, static_cache);
    if (want_grad) dW_static.setZero(K_, K_);
    regularize(W_static, static_cast<double>(N_), out, want_grad ? &dW_static : nullptr);
  }

  const bool global_chains = !dynamic && !windowed;
  Eigen::MatrixXd S_global;
  Eigen::MatrixXd dS_global;
  auto global_pair = [&](std::size_t i, std::size_t j) { return pair_value_[pair_index(i, j)]; };
  auto global_pair_adjoint = [&](std::size_t i, std::size_t j, double g) {
    pair_adjoint_[pair_index(i, j)] += g;
  };
  if (global_chains) {
    chain_sums(events_, global_pair, W_static, L_, S_global);
    if (want_grad) dS_global.setZero(L_, static_cast<Eigen::Index>(N_));
  }

  for (std::size_t r = 0; r <= N_; ++r) {
    if (r > 0) last_[static_cast<std::size_t>(events_[r - 1].k)] = events_[r - 1].t;
    const double a = r == 0 ? 0.0 : events_[r - 1].t;
    const double b = r < N_ ? events_[r].t : seq_.horizon;
    const auto window = history_window(events_.first(r), hp_);
    const std::size_t offset = r - window.size();
    const auto n = static_cast<Eigen::Index>(window.size());
    auto pair = [&](std::size_t i, std::size_t j) {
      return pair_value_[pair_index(i + offset, j + offset)];
    };
    auto pair_adjoint = [&](std::size_t i, std::size_t j, double g) {
      pair_adjoint_[pair_index(i + offset, j + offset)] += g;
    };

    AttentionCache frozen_cache;
    Eigen::MatrixXd W_frozen;
    Eigen::MatrixXd dW_frozen;
    if (frozen) {
      W_frozen = weights_forward(a, frozen_cache);
      if (want_grad) dW_frozen.setZero(K_, K_);
    }
    const Eigen::MatrixXd& W_interval = frozen ? W_frozen : W_static;
    Eigen::MatrixXd& dW_interval = frozen ? dW_frozen : dW_static;

    const bool interval_chains = !global_chains && (!dynamic || frozen);
    Eigen::MatrixXd S_interval;
    Eigen::MatrixXd dS_interval;
    if (interval_chains) {
      chain_sums(window, pair, W_interval, L_, S_interval);
      if (want_grad) dS_interval.setZero(L_, n);
    }

    const double length = b - a;
    const double h = length / M;
    for (int q = 0; q <= M; ++q) {
      const double t = q == M ? b : a + q * h;
      const double weight = length > 0.0 ? (q == 0 || q == M ? 0.5 * h : h) : 0.0;
      const int event_type = (q == M && r < N_) ? events_[r].k : -1;
      if (weight == 0.0 && event_type < 0) continue;

      if (dynamic && !frozen) {
        AttentionCache cache;
        const Eigen::MatrixXd W = weights_forward(t, cache);
        Eigen::MatrixXd S;
        chain_sums(window, pair, W, L_, S);
        knot(t, W, window, S, weight, event_type, out);
        Eigen::MatrixXd dW;
        if (want_grad) dW.setZero(K_, K_);
        if (event_type >= 0) regularize(W, 1.0, out, want_grad ? &dW : nullptr);
        if (want_grad) {
          Eigen::MatrixXd dS = Eigen::MatrixXd::Zero(L_, n);
          knot_backward(window, S, W, dS, dW);
          chain_sums_backward(window, pair, W, S, dS, dW, pair_adjoint);
          weights_backward(cache, std::move(dW));
        }
        continue;
      }

      if (global_chains) {
        knot(t, W_interval, window, S_global.leftCols(n), weight, event_type, out);
        if (want_grad) {
          knot_backward(window, S_global.leftCols(n), W_interval, dS_global.leftCols(n),
                        dW_interval);
        }
      } else {
        knot(t, W_interval, window, S_interval, weight, event_type, out);
        if (want_grad) knot_backward(window, S_interval, W_interval, dS_interval, dW_interval);
      }

      if (frozen && event_type >= 0) {
        AttentionCache cache;
        const Eigen::MatrixXd W = weights_forward(t, cache);
        Eigen::MatrixXd dW;
        if (want_grad) dW.setZero(K_, K_);
        regularize(W, 1.0, out, want_grad ? &dW : nullptr);
        if (want_grad) weights_backward(cache, std::move(dW));
      }
    }

    if (interval_chains && want_grad) {
      chain_sums_backward(window, pair, W_interval, S_interval, dS_interval, dW_interval,
                          pair_adjoint);
    }
    if (frozen && want_grad) weights_backward(frozen_cache, dW_frozen);
  }

  if (want_grad) {
    if (global_chains) {
      chain_sums_backward(events_, global_pair, W_static, S_global, dS_global, dW_static,
                          global_pair_adjoint);
    }
    if (!dynamic) weights_backward(static_cache, dW_static);
    for (std::size_t idx = 0; idx < pair_adjoint_.size(); ++idx) {
      decay_backward(pair_cache_[idx], params_, pair_adjoint_[idx], *grad_);
    }
  }

  out.nll = out.integral - out.log_intensity;
  out.finalize();
  return out;
}

void accumulate(LossBreakdown& into, const LossBreakdown& part) {
  into.nll += part.nll;
  into.acyclic += part.acyclic;
  into.sparse += part.sparse;
  into.log_intensity += part.log_intensity;
  into.integral += part.integral;
  into.total += part.total;
}

void scale(LossBreakdown& loss, double factor) {
  loss.nll *= factor;
  loss.acyclic *= factor;
  loss.sparse *= factor;
  loss.log_intensity *= factor;
  loss.integral *= factor;
  loss.total *= factor;
}

}  // namespace

LossBreakdown sequence_loss(const EventSequence& seq, const ModelParameters& params,
                            const HyperParameters& hp, ModelParameters* grad) {
  hp.validate();
  check_shapes(params, hp);
  validate_sequence(seq, hp.K);
  if (seq.events.empty()) {
    throw Error(ErrorCode::EmptySequence, "sequence '" + seq.id + "' has no events");
  }
  LossTape tape(seq, params, hp, grad);
  return tape.run();
}

double nll(const EventSequence& seq, const ModelParameters& params, const HyperParameters& hp) {
  HyperParameters plain = hp;
  plain.gamma_acyclic = 0.0;
  plain.gamma_sparse = 0.0;
  return sequence_loss(seq, params, plain).nll;
}

std::pair<double, double> regularizers(const EventSequence& seq, const ModelParameters& params,
                                       const HyperParameters& hp) {
  validate_sequence(seq, hp.K);
  HyperParameters plain = hp;
  plain.dag_mask = false;
  double acyclic = 0.0;
  double sparse = 0.0;
  const std::span<const Event> events = seq.events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const StructuralWeights Wt = query_weights(events.first(i), events[i].t, params, plain);
    if (hp.gamma_acyclic > 0.0) acyclic += acyclicity_value(Wt);
    if (hp.gamma_sparse > 0.0) sparse += sparsity_value(Wt);
  }
  return {hp.gamma_acyclic * acyclic, hp.gamma_sparse * sparse};
}

LossBreakdown batch_loss(std::span<const EventSequence> batch, const ModelParameters& params,
                         const HyperParameters& hp) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  std::vector<LossBreakdown> parts(batch.size());
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    parts[static_cast<std::size_t>(i)] = sequence_loss(batch[static_cast<std::size_t>(i)], params, hp);
  }
  LossBreakdown total;
  for (const auto& part : parts) accumulate(total, part);
  scale(total, 1.0 / static_cast<double>(batch.size()));
  return total;
}

std::pair<LossBreakdown, ModelParameters> loss_and_gradient(std::span<const EventSequence> batch,
                                                            const ModelParameters& params,
                                                            const HyperParameters& hp) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  std::vector<LossBreakdown> parts(batch.size());
  std::vector<ModelParameters> grads(batch.size(), zero_parameters(hp));
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto s = static_cast<std::size_t>(i);
    parts[s] = sequence_loss(batch[s], params, hp, &grads[s]);
  }
  LossBreakdown total;
  ModelParameters grad = zero_parameters(hp);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    accumulate(total, parts[s]);
    axpy(1.0, grads[s], grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  scale(total, inv);
  visit_tensors(grad, [&](std::string_view, auto, auto, std::span<double> v) {
    for (double& x : v) x *= inv;
  });
  if (!std::isfinite(total.total) || !grad.all_finite()) {
    throw Error(ErrorCode::NonFiniteLoss, "loss or gradient is not finite");
  }
  return {total, std::move(grad)};
}

GradientCheckReport check_gradients(std::span<const EventSequence> batch,
                                    const ModelParameters& params, const HyperParameters& hp,
                                    double step) {
  const auto [loss, analytic] = loss_and_gradient(batch, params, hp);
  (void)loss;
  ModelParameters probe = params;

  std::vector<std::span<double>> probe_views;
  std::vector<std::span<const double>> analytic_views;
  std::vector<std::string> names;
  visit_tensors(probe, [&](std::string_view name, auto, auto, std::span<double> v) {
    probe_views.push_back(v);
    names.emplace_back(name);
  });
  double total2 = 0.0;
  visit_tensors(analytic, [&](std::string_view, auto, auto, std::span<const double> v) {
    analytic_views.push_back(v);
    for (double g : v) total2 += g * g;
  });
  const double floor = 1e-4 * std::sqrt(total2);

  const double scale = 1.0 + std::abs(batch_loss(batch, params, hp).total);
  auto central = [&](double& x, double h) {
    const double saved = x;
    x = saved + h;
    const double up = batch_loss(batch, probe, hp).total;
    x = saved - h;
    const double down = batch_loss(batch, probe, hp).total;
    x = saved;
    return (up - down) / (2.0 * h);
  };

  GradientCheckReport report;
  for (std::size_t t = 0; t < probe_views.size(); ++t) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < probe_views[t].size(); ++i) {
      double& x = probe_views[t][i];
      const double a = analytic_views[t][i];
      double numeric = central(x, step);
      if (std::abs(numeric - a) > 1e-7 * (std::abs(a) + std::abs(numeric)) + 1e-12) {
        // ReLU, LeakyReLU and |w| kinks inside [x - h, x + h] make the step-h
        // difference disagree with smaller steps. Walk the step down until two
        // consecutive differences agree to within truncation plus roundoff.
        double prev = numeric;
        double h = step;
        for (int m = 1; m <= 5; ++m) {
          h /= 4.0;
          const double cur = central(x, h);
          const double tol = 1e-6 * (std::abs(cur) + std::abs(prev)) + 1e-14 * scale / h;
          if (std::abs(cur - prev) <= tol) {
            if (m > 1) {
              numeric = cur;
              ++report.refined;
            }
            break;
          }
          prev = cur;
        }
      }
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    TensorCheck check;
    check.name = names[t];
    check.analytic_norm = std::sqrt(a2);
    check.numeric_norm = std::sqrt(n2);
    const double denom = std::max({check.analytic_norm, check.numeric_norm, floor});
    check.relative_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    report.worst = std::max(report.worst, check.relative_error);
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace mocha
