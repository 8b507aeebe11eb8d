#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mocha/hyperparameters.hpp"
#include "mocha/parameters.hpp"
#include "mocha/types.hpp"

namespace mocha {

struct PlantedEdge {
  int from{0};
  int to{0};
  double weight{0.0};  ///< expected number of direct offspring per parent event
};

/// A declared ground-truth path p_0 -> ... -> p_l. A positive `weight` adds a
/// genuinely multi-hop term to the intensity of p_l: every time-ordered chain
/// of events typed p_0, ..., p_{l-1} excites p_l by weight * prod(delta e^{-delta gap}).
struct PlantedPath {
  std::vector<int> types;
  std::string label;
  double weight{0.0};
};

/// Exponential-kernel generator with a planted acyclic structure:
///   lambda_k(t) = mu_k + sum_j A[k_j, k] delta e^{-delta (t - t_j)} + chain terms.
struct PlantedGenerator {
  int K{0};
  std::vector<double> mu;
  double decay_rate{1.0};
  std::vector<PlantedEdge> edges;
  std::vector<PlantedPath> paths;

  /// Throws InvalidArgument: rates must be positive, weights non-negative,
  /// edges acyclic, and every path hop must be a planted edge.
  void validate() const;
  /// K x K matrix of edge weights.
  [[nodiscard]] Eigen::MatrixXd adjacency() const;
};

/// Incremental intensity of a planted generator. Excitation states decay
/// uniformly between events, so the intensity never increases between events.
class PlantedProcess {
 public:
  explicit PlantedProcess(PlantedGenerator generator);

  void reset();
  void push(const Event& e);
  /// Intensities at t >= the last pushed event.
  [[nodiscard]] Eigen::VectorXd intensity(double t) const;
  [[nodiscard]] const PlantedGenerator& generator() const noexcept { return generator_; }

 private:
  struct Chain {
    std::vector<int> types;
    double weight;
    std::vector<double> state;  ///< partial chain sums at last_time_, per prefix length
  };

  PlantedGenerator generator_;
  std::vector<Chain> chains_;
  double last_time_{0.0};
};

struct SimulationOptions {
  std::size_t max_events{1'000'000};
};

/// Ogata thinning from a planted generator; deterministic in seed.
[[nodiscard]] EventSequence simulate(const PlantedGenerator& generator, double horizon,
                                     std::uint64_t seed, const SimulationOptions& options = {});

/// Ogata thinning from a learned model. Aborts with BoundViolation if an
/// evaluated intensity exceeds the current bound.
[[nodiscard]] EventSequence simulate(const ModelParameters& params, const HyperParameters& hp,
                                     double horizon, std::uint64_t seed,
                                     const SimulationOptions& options = {});

/// Seed for sequence `index` of a corpus drawn with `seed`.
[[nodiscard]] std::uint64_t sequence_seed(std::uint64_t seed, std::uint64_t index);

[[nodiscard]] std::vector<EventSequence> simulate_corpus(const PlantedGenerator& generator,
                                                         std::size_t count, double horizon,
                                                         std::uint64_t seed);
[[nodiscard]] std::vector<EventSequence> simulate_corpus(const ModelParameters& params,
                                                         const HyperParameters& hp,
                                                         std::size_t count, double horizon,
                                                         std::uint64_t seed);

/// Integrated total intensity over each inter-event interval (the first from
/// 0). Unit-exponential under the true model. `substeps` = 0 uses hp.substeps.
[[nodiscard]] std::vector<double> time_rescaling_residuals(const EventSequence& seq,
                                                           const ModelParameters& params,
                                                           const HyperParameters& hp,
                                                           int substeps = 0);

}  // namespace mocha
