#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mocha {

/// Model ladder, from a self-exciting baseline up to the full model.
enum class Variant {
  HawkesUni,         ///< first order, static weights, self-excitation only
  HawkesMulti,       ///< first order, static K x K weights
  MultiOrderStatic,  ///< orders 1..L, static weights
  FullDynamic,       ///< orders 1..L, weights recomputed from the history at every query
};

[[nodiscard]] std::string_view to_string(Variant v) noexcept;
[[nodiscard]] std::optional<Variant> parse_variant(std::string_view name) noexcept;

struct HyperParameters {
  int K{2};
  int d{8};        ///< embedding half-dimension; embeddings have 2d entries
  int d_attn{8};   ///< attention projection dimension
  int hidden{16};  ///< decay MLP hidden width
  int L{1};        ///< maximum causal order
  double beta{1.0};
  double theta{0.5};
  double gamma_acyclic{0.1};
  double gamma_sparse{0.01};
  int substeps{10};  ///< trapezoid sub-intervals per inter-event interval
  double epsilon{1e-9};
  Variant variant{Variant::FullDynamic};

  int max_history{0};           ///< 0 keeps the whole history
  bool frozen_weights{false};   ///< hold W_t fixed across each inter-event interval
  bool dag_mask{false};         ///< inference only: zero hop weights whose edge is below threshold
  double time_scale{1.0};       ///< raw file times are multiplied by this before modelling

  /// Number of orders the variant actually uses.
  [[nodiscard]] int effective_order() const noexcept;
  /// True when W_t depends on the query time.
  [[nodiscard]] bool dynamic_weights() const noexcept { return variant == Variant::FullDynamic; }
  [[nodiscard]] int embedding_dim() const noexcept { return 2 * d; }

  /// Throws Error(InvalidArgument) when a field is outside its domain.
  void validate() const;
};

/// Library defaults for a K-type problem, with L = min(3, K - 1).
[[nodiscard]] HyperParameters default_hyperparameters(int K);

}  // namespace mocha
