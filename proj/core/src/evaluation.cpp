#include "mocha/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "mocha/error.hpp"
#include "mocha/graph.hpp"
#include "mocha/likelihood.hpp"
#include "mocha/stats.hpp"

namespace mocha {

void GroundTruthPath::validate(int K) const {
  if (types.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "path '" + label + "' needs at least two types");
  }
  for (int k : types) {
    if (k < 0 || k >= K) {
      throw Error(ErrorCode::InvalidArgument, "path '" + label + "' has a type out of range");
    }
  }
}

Prediction next_event_prediction(const IntensityEvaluator& evaluator, double horizon_cap,
                                 int grid) {
  if (!(horizon_cap > 0.0) || !std::isfinite(horizon_cap)) {
    throw Error(ErrorCode::InvalidArgument, "horizon cap must be positive");
  }
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "prediction grid needs two points");
  const auto history = evaluator.history();
  const double t0 = history.empty() ? 0.0 : history.back().t;
  const double h = horizon_cap / grid;

  // Density p(s) = lambda(s) exp(-Lambda(s)) on a uniform grid of gaps.
  std::vector<double> lambda(static_cast<std::size_t>(grid) + 1);
  for (int g = 0; g <= grid; ++g) lambda[static_cast<std::size_t>(g)] = evaluator.total(t0 + g * h);
  double cumulative = 0.0;
  double mass = 0.0;
  double first_moment = 0.0;
  double prev_p = lambda[0];
  for (int g = 1; g <= grid; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    cumulative += 0.5 * h * (lambda[gi - 1] + lambda[gi]);
    const double p = lambda[gi] * std::exp(-cumulative);
    mass += 0.5 * h * (prev_p + p);
    first_moment += 0.5 * h * ((g - 1) * h * prev_p + g * h * p);
    prev_p = p;
  }

  Prediction out;
  out.tail_mass = std::exp(-cumulative);
  out.truncated = out.tail_mass >= 0.05;
  out.time = t0 + (mass > 0.0 ? first_moment / mass : horizon_cap);
  const Eigen::VectorXd at = evaluator.evaluate(out.time).lambda_total;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < at.size(); ++k) {
    if (at(k) > at(best)) best = k;
  }
  out.type = static_cast<int>(best);
  return out;
}

void score_predictions(std::span<const Prediction> predictions, std::span<const Event> truth,
                       Metrics& metrics) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::InvalidArgument, "prediction and truth counts differ");
  }
  double sq = 0.0;
  std::size_t correct = 0;
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double diff = predictions[i].time - truth[i].t;
    sq += diff * diff;
    if (predictions[i].type == truth[i].k) ++correct;
    if (predictions[i].truncated) ++truncated;
  }
  const auto n = static_cast<double>(predictions.size());
  metrics.predictions = predictions.size();
  metrics.truncated = truncated;
  metrics.rmse = predictions.empty() ? 0.0 : std::sqrt(sq / n);
  metrics.accuracy = predictions.empty() ? 0.0 : static_cast<double>(correct) / n;
}

Metrics evaluate_metrics(std::span<const EventSequence> corpus, const ModelParameters& params,
                         const HyperParameters& hp, const PredictionOptions& options) {
  for (const auto& seq : corpus) validate_sequence(seq, hp.K);
  double cap = options.horizon_cap;
  if (cap <= 0.0) {
    const double gap = mean_inter_event_gap(corpus);
    cap = 20.0 * (gap > 0.0 ? gap : 1.0);
  }

  const std::size_t n = corpus.size();
  std::vector<double> seq_nll(n, 0.0);
  std::vector<std::vector<Prediction>> preds(n);
  std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
    const auto i = static_cast<std::size_t>(s);
    try {
      const EventSequence& seq = corpus[i];
      seq_nll[i] = nll(seq, params, hp);
      IntensityEvaluator evaluator(params, hp);
      for (std::size_t j = 0; j < seq.events.size(); ++j) {
        if (j > 0) preds[i].push_back(next_event_prediction(evaluator, cap, options.grid));
        evaluator.push(seq.events[j]);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Metrics m;
  std::vector<Prediction> all_preds;
  std::vector<Event> all_truth;
  double total_nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_nll += seq_nll[i];
    m.events += corpus[i].events.size();
    all_preds.insert(all_preds.end(), preds[i].begin(), preds[i].end());
    if (corpus[i].events.size() > 1) {
      all_truth.insert(all_truth.end(), corpus[i].events.begin() + 1, corpus[i].events.end());
    }
  }
  m.sequences = n;
  m.nll_per_event = m.events == 0 ? 0.0 : total_nll / static_cast<double>(m.events);
  m.nll_per_sequence = n == 0 ? 0.0 : total_nll / static_cast<double>(n);
  score_predictions(all_preds, all_truth, m);
  return m;
}

std::vector<PathMatch> path_matching_rate(std::span<const EventSequence> corpus,
                                          const ModelParameters& params, const HyperParameters& hp,
                                          std::span<const GroundTruthPath> paths,
                                          std::optional<int> terminal_type) {
  for (const auto& p : paths) p.validate(hp.K);
  if (terminal_type && (*terminal_type < 0 || *terminal_type >= hp.K)) {
    throw Error(ErrorCode::InvalidArgument, "terminal type out of range");
  }
  HyperParameters probe = hp;
  probe.dag_mask = false;

  std::vector<PathMatch> out(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) out[p].label = paths[p].label;

  for (const auto& seq : corpus) {
    validate_sequence(seq, hp.K);
    const std::span<const Event> events(seq.events);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const int k = events[i].k;
      std::optional<CausalGraph> graph;
      for (std::size_t p = 0; p < paths.size(); ++p) {
        const int terminal = terminal_type ? *terminal_type : paths[p].types.back();
        if (k != terminal) continue;
        if (!graph) {
          graph = threshold_graph(query_weights(events.first(i), events[i].t, params, probe), hp);
        }
        ++out[p].occurrences;
        const auto& types = paths[p].types;
        bool all = true;
        for (std::size_t r = 1; r < types.size() && all; ++r) {
          all = graph->A(types[r - 1], types[r]) != 0;
        }
        if (all) ++out[p].matched;
      }
    }
  }
  return out;
}

double edge_auc(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& planted) {
  if (scores.rows() != planted.rows() || scores.cols() != planted.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "score and planted matrices differ in shape");
  }
  std::vector<double> s;
  std::vector<int> labels;
  for (Eigen::Index u = 0; u < scores.rows(); ++u) {
    for (Eigen::Index v = 0; v < scores.cols(); ++v) {
      if (u == v) continue;
      s.push_back(scores(u, v));
      labels.push_back(planted(u, v) > 0.0 ? 1 : 0);
    }
  }
  return roc_auc(s, labels);
}

EdgeRecovery edge_recovery_auc(const ModelParameters& params, const HyperParameters& hp,
                               const PlantedGenerator& planted,
                               std::span<const double> probe_times,
                               std::span<const EventSequence> corpus) {
  planted.validate();
  if (planted.K != hp.K) {
    throw Error(ErrorCode::ShapeMismatch, "planted generator and model disagree on K");
  }
  HyperParameters probe = hp;
  probe.dag_mask = false;

  EdgeRecovery out;
  out.scores = Eigen::MatrixXd::Zero(hp.K, hp.K);
  std::size_t count = 0;
  for (const auto& seq : corpus) {
    validate_sequence(seq, hp.K);
    for (double t : probe_times) {
      if (t < 0.0 || t > seq.horizon) continue;
      const auto end = std::lower_bound(seq.events.begin(), seq.events.end(), t,
                                        [](const Event& e, double x) { return e.t < x; });
      const std::span<const Event> history(seq.events.begin(), end);
      const StructuralWeights Wt = query_weights(history, t, params, probe);
      out.scores += Wt.W.unaryExpr([&](double w) { return edge_activation(w, hp.beta); });
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no probe time falls inside any horizon");
  out.scores /= static_cast<double>(count);
  out.auc = edge_auc(out.scores, planted.adjacency());
  return out;
}

}  // namespace mocha
