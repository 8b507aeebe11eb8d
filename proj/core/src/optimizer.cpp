#include "mocha/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "mocha/error.hpp"

namespace mocha {

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Adam ? "ADAM" : "SGD";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) noexcept {
  if (name == "ADAM" || name == "adam") return OptimizerKind::Adam;
  if (name == "SGD" || name == "sgd") return OptimizerKind::Sgd;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("training config: ") + what);
  };
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be positive");
  require(max_epochs > 0, "max epochs must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam beta1 must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam beta2 must lie in [0, 1)");
  require(adam_eps > 0.0, "adam eps must be positive");
  require(patience >= 0, "patience must be non-negative");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "held-out fraction must lie in [0, 1)");
}

Optimizer::Optimizer(const TrainConfig& config, const HyperParameters& hp)
    : config_(config), first_moment_(zero_parameters(hp)), second_moment_(zero_parameters(hp)) {}

void Optimizer::step(ModelParameters& params, const ModelParameters& grad) {
  ++steps_;
  std::vector<std::span<const double>> g;
  visit_tensors(grad, [&](std::string_view, auto, auto, std::span<const double> v) {
    g.push_back(v);
  });

  if (config_.optimizer == OptimizerKind::Sgd) {
    axpy(-config_.learning_rate, grad, params);
    return;
  }

  std::vector<std::span<double>> m, v;
  visit_tensors(first_moment_, [&](std::string_view, auto, auto, std::span<double> s) {
    m.push_back(s);
  });
  visit_tensors(second_moment_, [&](std::string_view, auto, auto, std::span<double> s) {
    v.push_back(s);
  });
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  std::size_t t = 0;
  visit_tensors(params, [&](std::string_view, auto, auto, std::span<double> p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[t][i];
      m[t][i] = b1 * m[t][i] + (1.0 - b1) * gi;
      v[t][i] = b2 * v[t][i] + (1.0 - b2) * gi * gi;
      const double m_hat = m[t][i] / correction1;
      const double v_hat = v[t][i] / correction2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.adam_eps);
    }
    ++t;
  });
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double holdout_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto holdout = static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(n)));
  if (n < 2 || holdout == 0 || holdout >= n) return {order, order};
  std::mt19937_64 rng(seed ^ 0x5eed5b1175ULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(holdout));
  std::vector<std::size_t> held(order.end() - static_cast<std::ptrdiff_t>(holdout), order.end());
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());
  return {train, held};
}

FitResult fit(std::span<const EventSequence> corpus, ModelParameters init,
              const HyperParameters& hp, const TrainConfig& config,
              const std::function<void(const EpochRecord&)>& on_record) {
  hp.validate();
  config.validate();
  check_shapes(init, hp);
  if (corpus.empty()) throw Error(ErrorCode::InvalidArgument, "training corpus is empty");
  for (const auto& seq : corpus) validate_sequence(seq, hp.K);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const auto [train_idx, held_idx] = split_indices(corpus.size(), config.holdout_fraction, config.seed);
  std::vector<EventSequence> held;
  held.reserve(held_idx.size());
  for (auto i : held_idx) held.push_back(corpus[i]);

  FitResult result;
  auto record = [&](int epoch, const char* split, const LossBreakdown& loss) {
    EpochRecord rec{epoch, split, loss, elapsed()};
    if (on_record) on_record(rec);
    result.log.push_back(std::move(rec));
  };

  ModelParameters params = std::move(init);
  Optimizer optimizer(config, hp);
  std::mt19937_64 rng(config.seed);

  LossBreakdown best = batch_loss(held, params, hp);
  record(0, "heldout", best);
  result.params = params;
  result.best_epoch = 0;
  double best_total = std::isfinite(best.total) ? best.total : std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order = train_idx;
  std::vector<EventSequence> batch;
  int stale = 0;
  int non_finite_epochs = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown train_loss;
    double weight = 0.0;
    bool finite = true;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(corpus[order[i]]);
      try {
        auto [loss, grad] = loss_and_gradient(batch, params, hp);
        optimizer.step(params, grad);
        const double w = static_cast<double>(batch.size());
        train_loss.nll += w * loss.nll;
        train_loss.acyclic += w * loss.acyclic;
        train_loss.sparse += w * loss.sparse;
        train_loss.log_intensity += w * loss.log_intensity;
        train_loss.integral += w * loss.integral;
        weight += w;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss && e.code() != ErrorCode::NumericOverflow) throw;
        finite = false;
      }
    }
    if (weight > 0.0) {
      train_loss.nll /= weight;
      train_loss.acyclic /= weight;
      train_loss.sparse /= weight;
      train_loss.log_intensity /= weight;
      train_loss.integral /= weight;
    }
    train_loss.finalize();
    record(epoch, "train", train_loss);

    LossBreakdown held_loss;
    try {
      held_loss = batch_loss(held, params, hp);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericOverflow) throw;
      held_loss.total = std::numeric_limits<double>::quiet_NaN();
    }
    record(epoch, "heldout", held_loss);
    finite = finite && std::isfinite(held_loss.total) && params.all_finite();

    non_finite_epochs = finite ? 0 : non_finite_epochs + 1;
    if (non_finite_epochs >= 3) {
      throw Error(ErrorCode::Diverged, "loss was not finite for three consecutive epochs");
    }
    if (finite && held_loss.total < best_total) {
      best_total = held_loss.total;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale > config.patience) {
      result.early_stopped = true;
      break;
    }
  }

  record(result.best_epoch, "final", batch_loss(corpus, result.params, hp));
  return result;
}

}  // namespace mocha
