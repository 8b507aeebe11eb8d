#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mocha/hyperparameters.hpp"
#include "mocha/intensity.hpp"
#include "mocha/parameters.hpp"
#include "mocha/simulation.hpp"
#include "mocha/types.hpp"

namespace mocha {

struct GroundTruthPath {
  std::vector<int> types;  ///< cause first, effect last
  std::string label;

  /// Throws InvalidArgument unless length >= 2 and every index is below K.
  void validate(int K) const;
};

struct Prediction {
  double time{0.0};
  int type{0};
  bool truncated{false};  ///< at least 5% of the next-event mass lies past the cap
  double tail_mass{0.0};
};

struct PredictionOptions {
  double horizon_cap{0.0};  ///< 0 picks 20x the corpus mean gap
  int grid{400};
};

/// Expected next event time and most likely type given everything pushed into
/// `evaluator`. The search window is (t_last, t_last + horizon_cap].
[[nodiscard]] Prediction next_event_prediction(const IntensityEvaluator& evaluator,
                                               double horizon_cap, int grid = 400);

struct Metrics {
  double nll_per_event{0.0};
  double nll_per_sequence{0.0};
  double rmse{0.0};
  double accuracy{0.0};
  std::size_t events{0};
  std::size_t sequences{0};
  std::size_t predictions{0};
  std::size_t truncated{0};
};

/// RMSE and accuracy of predictions against observed events.
void score_predictions(std::span<const Prediction> predictions, std::span<const Event> truth,
                       Metrics& metrics);

/// NLL (regularizers excluded), next-event RMSE and type accuracy. The first
/// event of every sequence is not predicted.
[[nodiscard]] Metrics evaluate_metrics(std::span<const EventSequence> corpus,
                                       const ModelParameters& params, const HyperParameters& hp,
                                       const PredictionOptions& options = {});

struct PathMatch {
  std::string label;
  std::size_t occurrences{0};
  std::size_t matched{0};
  [[nodiscard]] double rate() const noexcept {
    return occurrences == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(occurrences);
  }
};

/// For each occurrence of the terminal type, threshold W_t (history strictly
/// before the event) and test whether every hop of the path is an edge. The
/// terminal type defaults to each path's last type. Uses hp.beta and hp.theta.
[[nodiscard]] std::vector<PathMatch> path_matching_rate(std::span<const EventSequence> corpus,
                                                        const ModelParameters& params,
                                                        const HyperParameters& hp,
                                                        std::span<const GroundTruthPath> paths,
                                                        std::optional<int> terminal_type = {});

struct EdgeRecovery {
  double auc{0.5};
  Eigen::MatrixXd scores;  ///< mean edge activation per ordered pair
};

/// Mean activation of W_t[u, v] over every (sequence, probe time) pair with
/// the probe inside the sequence horizon; AUC over off-diagonal pairs against
/// the planted edge set.
[[nodiscard]] EdgeRecovery edge_recovery_auc(const ModelParameters& params,
                                             const HyperParameters& hp,
                                             const PlantedGenerator& planted,
                                             std::span<const double> probe_times,
                                             std::span<const EventSequence> corpus);

/// AUC of a K x K score matrix against a planted adjacency, diagonal excluded.
[[nodiscard]] double edge_auc(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& planted);

}  // namespace mocha
