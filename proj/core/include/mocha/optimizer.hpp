#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mocha/hyperparameters.hpp"
#include "mocha/likelihood.hpp"
#include "mocha/parameters.hpp"
#include "mocha/types.hpp"

namespace mocha {

enum class OptimizerKind { Adam, Sgd };

[[nodiscard]] std::string_view to_string(OptimizerKind kind) noexcept;
[[nodiscard]] std::optional<OptimizerKind> parse_optimizer(std::string_view name) noexcept;

struct TrainConfig {
  double learning_rate{1e-2};
  int max_epochs{200};
  int batch_size{16};
  std::uint64_t seed{0};
  OptimizerKind optimizer{OptimizerKind::Adam};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
  int patience{20};
  double holdout_fraction{0.2};

  void validate() const;
};

/// First-order update rule with its own state.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const HyperParameters& hp);
  void step(ModelParameters& params, const ModelParameters& grad);

 private:
  TrainConfig config_;
  ModelParameters first_moment_;
  ModelParameters second_moment_;
  std::int64_t steps_{0};
};

struct EpochRecord {
  int epoch{0};
  std::string split;  ///< "train", "heldout" or "final"
  LossBreakdown loss;
  double wall_time{0.0};  ///< seconds since fit started
};

struct FitResult {
  ModelParameters params;  ///< parameters of the best held-out epoch
  std::vector<EpochRecord> log;
  int best_epoch{0};
  bool early_stopped{false};
};

/// Deterministic shuffle-and-split of [0, n) into (train, held-out). With a
/// single sequence or a zero fraction both sides are the whole range.
[[nodiscard]] std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double holdout_fraction, std::uint64_t seed);

/// Mini-batch training with early stopping on the held-out objective. The
/// last log record (split "final") is the objective of the returned
/// parameters over the whole corpus. Throws Diverged after three consecutive
/// epochs with a non-finite loss.
[[nodiscard]] FitResult fit(std::span<const EventSequence> corpus, ModelParameters init,
                            const HyperParameters& hp, const TrainConfig& config,
                            const std::function<void(const EpochRecord&)>& on_record = {});

}  // namespace mocha
