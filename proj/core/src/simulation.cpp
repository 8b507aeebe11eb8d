#include "mocha/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mocha/error.hpp"
#include "mocha/intensity.hpp"

namespace mocha {

void PlantedGenerator::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (K < 1) fail("generator needs at least one type");
  if (static_cast<int>(mu.size()) != K) fail("generator mu must have K entries");
  for (double m : mu) {
    if (!(m > 0.0) || !std::isfinite(m)) fail("generator base rates must be positive");
  }
  if (!(decay_rate > 0.0) || !std::isfinite(decay_rate)) fail("decay rate must be positive");
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= K || e.to < 0 || e.to >= K) fail("edge endpoint out of range");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) fail("edge weights must be non-negative");
  }
  const Eigen::MatrixXd A = adjacency();
  // Kahn's algorithm on the support.
  std::vector<int> indegree(static_cast<std::size_t>(K), 0);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < K; ++v)
      if (A(u, v) > 0.0) ++indegree[static_cast<std::size_t>(v)];
  std::vector<int> ready;
  for (int v = 0; v < K; ++v)
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  int visited = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++visited;
    for (int v = 0; v < K; ++v) {
      if (A(u, v) > 0.0 && --indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
    }
  }
  if (visited != K) fail("planted edges contain a cycle");
  for (const auto& p : paths) {
    if (p.types.size() < 2) fail("path '" + p.label + "' needs at least two types");
    for (int k : p.types) {
      if (k < 0 || k >= K) fail("path '" + p.label + "' has a type out of range");
    }
    for (std::size_t r = 1; r < p.types.size(); ++r) {
      if (!(A(p.types[r - 1], p.types[r]) > 0.0)) {
        fail("path '" + p.label + "' uses a hop that is not a planted edge");
      }
    }
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) fail("path weights must be non-negative");
  }
}

Eigen::MatrixXd PlantedGenerator::adjacency() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
  for (const auto& e : edges) A(e.from, e.to) += e.weight;
  return A;
}

PlantedProcess::PlantedProcess(PlantedGenerator generator) : generator_(std::move(generator)) {
  generator_.validate();
  for (const auto& e : generator_.edges) {
    if (e.weight > 0.0) chains_.push_back({{e.from, e.to}, e.weight, {}});
  }
  for (const auto& p : generator_.paths) {
    if (p.weight > 0.0 && p.types.size() > 2) chains_.push_back({p.types, p.weight, {}});
  }
  reset();
}

void PlantedProcess::reset() {
  last_time_ = 0.0;
  for (auto& c : chains_) c.state.assign(c.types.size() - 1, 0.0);
}

void PlantedProcess::push(const Event& e) {
  const double delta = generator_.decay_rate;
  const double shrink = std::exp(-delta * (e.t - last_time_));
  for (auto& c : chains_) {
    for (double& s : c.state) s *= shrink;
    // Longest prefixes first so the new event never chains with itself.
    for (std::size_t r = c.state.size(); r-- > 0;) {
      if (c.types[r] != e.k) continue;
      const double incoming = r == 0 ? 1.0 : c.state[r - 1];
      c.state[r] += delta * incoming;
    }
  }
  last_time_ = e.t;
}

Eigen::VectorXd PlantedProcess::intensity(double t) const {
  Eigen::VectorXd lambda(generator_.K);
  for (int k = 0; k < generator_.K; ++k) lambda(k) = generator_.mu[static_cast<std::size_t>(k)];
  const double shrink = std::exp(-generator_.decay_rate * (t - last_time_));
  for (const auto& c : chains_) {
    lambda(c.types.back()) += c.weight * c.state.back() * shrink;
  }
  return lambda;
}

std::uint64_t sequence_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

// Expected proposals per bound window; trades refresh cost against slack.
constexpr double kProposalsPerBound = 8.0;

int draw_type(const Eigen::VectorXd& lambda, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double target = unit(rng) * total;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    acc += lambda(k);
    if (target < acc) return static_cast<int>(k);
  }
  return static_cast<int>(lambda.size() - 1);
}

void check_bound(double total, double bound, double t) {
  if (total > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "intensity " << total << " exceeds thinning bound " << bound << " at t=" << t;
    throw Error(ErrorCode::BoundViolation, msg.str());
  }
}

void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::InvalidArgument, "simulation horizon must be positive");
  }
}

}  // namespace

EventSequence simulate(const PlantedGenerator& generator, double horizon, std::uint64_t seed,
                       const SimulationOptions& options) {
  check_horizon(horizon);
  PlantedProcess process(generator);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  EventSequence seq;
  seq.horizon = horizon;
  seq.allow_empty = true;
  double t = 0.0;
  for (;;) {
    // Non-increasing between events: the current value bounds the future.
    const double bound = process.intensity(t).sum();
    t += unit_exp(rng) / bound;
    if (t > horizon) break;
    const Eigen::VectorXd lambda = process.intensity(t);
    const double total = lambda.sum();
    check_bound(total, bound, t);
    if (unit(rng) * bound > total) continue;
    const Event e{t, draw_type(lambda, total, rng)};
    seq.events.push_back(e);
    process.push(e);
    if (seq.events.size() > options.max_events) {
      throw Error(ErrorCode::NumericOverflow, "simulation exceeded the event cap");
    }
  }
  return seq;
}

EventSequence simulate(const ModelParameters& params, const HyperParameters& hp, double horizon,
                       std::uint64_t seed, const SimulationOptions& options) {
  check_horizon(horizon);
  IntensityEvaluator evaluator(params, hp);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  EventSequence seq;
  seq.horizon = horizon;
  seq.allow_empty = true;
  // The bound holds over [t, stale); past that it is refreshed without an
  // evaluation, which memorylessness of the proposal stream allows.
  double t = 0.0;
  double lookahead = 1.0;
  double bound = evaluator.upper_bound(t, lookahead);
  double stale = t + lookahead;
  const auto refresh = [&] {
    lookahead = std::min(1.0, kProposalsPerBound / bound);
    bound = evaluator.upper_bound(t, lookahead);
    stale = t + lookahead;
  };
  for (;;) {
    const double proposal = t + unit_exp(rng) / bound;
    if (proposal > stale) {
      t = stale;
      if (t >= horizon) break;
      refresh();
      continue;
    }
    t = proposal;
    if (t > horizon) break;
    const IntensityBreakdown lambda = evaluator.evaluate(t);
    const double total = lambda.lambda_total.sum();
    check_bound(total, bound, t);
    if (unit(rng) * bound > total) continue;
    const Event e{t, draw_type(lambda.lambda_total, total, rng)};
    seq.events.push_back(e);
    evaluator.push(e);
    if (seq.events.size() > options.max_events) {
      throw Error(ErrorCode::NumericOverflow, "simulation exceeded the event cap");
    }
    refresh();
  }
  return seq;
}

std::vector<EventSequence> simulate_corpus(const PlantedGenerator& generator, std::size_t count,
                                           double horizon, std::uint64_t seed) {
  std::vector<EventSequence> corpus(count);
  for (std::size_t i = 0; i < count; ++i) {
    corpus[i] = simulate(generator, horizon, sequence_seed(seed, i));
    corpus[i].id = "seq-" + std::to_string(i);
  }
  return corpus;
}

std::vector<EventSequence> simulate_corpus(const ModelParameters& params, const HyperParameters& hp,
                                           std::size_t count, double horizon, std::uint64_t seed) {
  std::vector<EventSequence> corpus(count);
  for (std::size_t i = 0; i < count; ++i) {
    corpus[i] = simulate(params, hp, horizon, sequence_seed(seed, i));
    corpus[i].id = "seq-" + std::to_string(i);
  }
  return corpus;
}

std::vector<double> time_rescaling_residuals(const EventSequence& seq,
                                             const ModelParameters& params,
                                             const HyperParameters& hp, int substeps) {
  const int M = substeps > 0 ? substeps : hp.substeps;
  IntensityEvaluator evaluator(params, hp);
  std::vector<double> residuals;
  residuals.reserve(seq.events.size());
  double a = 0.0;
  for (const Event& e : seq.events) {
    const double h = (e.t - a) / M;
    double integral = 0.0;
    for (int q = 0; q <= M; ++q) {
      const double t = q == M ? e.t : a + q * h;
      const double w = (q == 0 || q == M) ? 0.5 * h : h;
      integral += w * evaluator.total(t);
    }
    residuals.push_back(integral);
    evaluator.push(e);
    a = e.t;
  }
  return residuals;
}

}  // namespace mocha
