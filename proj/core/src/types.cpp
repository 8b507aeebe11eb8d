#include "mocha/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mocha/error.hpp"

namespace mocha {

void validate_sequence(const EventSequence& seq, int K) {
  if (!(seq.horizon > 0.0) || !std::isfinite(seq.horizon)) {
    std::ostringstream msg;
    msg << "sequence '" << seq.id << "' has non-positive horizon " << seq.horizon;
    throw Error(ErrorCode::HorizonViolation, msg.str());
  }
  if (seq.events.empty() && !seq.allow_empty) {
    throw Error(ErrorCode::EmptySequence, "sequence '" + seq.id + "' has no events");
  }
  double previous = 0.0;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const Event& e = seq.events[i];
    if (!std::isfinite(e.t) || e.t < 0.0 || e.t > seq.horizon) {
      std::ostringstream msg;
      msg << "sequence '" << seq.id << "' event " << i << " at t=" << e.t
          << " lies outside [0, " << seq.horizon << "]";
      throw Error(ErrorCode::HorizonViolation, msg.str());
    }
    if (i > 0 && !(e.t > previous)) {
      std::ostringstream msg;
      msg << "sequence '" << seq.id << "' event " << i << " at t=" << e.t
          << " does not follow t=" << previous;
      throw Error(ErrorCode::NonMonotonicTime, msg.str());
    }
    if (e.k < 0 || e.k >= K) {
      std::ostringstream msg;
      msg << "sequence '" << seq.id << "' event " << i << " has type " << e.k
          << " outside [0, " << K << ")";
      throw Error(ErrorCode::TypeOutOfRange, msg.str());
    }
    previous = e.t;
  }
}

int infer_type_count(std::span<const EventSequence> corpus) {
  int K = 0;
  for (const auto& seq : corpus) {
    for (const auto& e : seq.events) K = std::max(K, e.k + 1);
  }
  return K;
}

double mean_inter_event_gap(std::span<const EventSequence> corpus) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& seq : corpus) {
    double previous = 0.0;
    for (const auto& e : seq.events) {
      total += e.t - previous;
      previous = e.t;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::vector<EventSequence> rescale_time(std::span<const EventSequence> corpus, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "time scale must be positive and finite");
  }
  std::vector<EventSequence> out(corpus.begin(), corpus.end());
  for (auto& seq : out) {
    seq.horizon *= scale;
    for (auto& e : seq.events) e.t *= scale;
  }
  return out;
}

}  // namespace mocha
