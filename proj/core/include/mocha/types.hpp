#pragma once

#include <span>
#include <string>
#include <vector>

namespace mocha {

struct Event {
  double t{0.0};
  int k{0};

  friend bool operator==(const Event&, const Event&) = default;
};

/// Events observed on the window [0, horizon], ordered by strictly increasing
/// time.
struct EventSequence {
  std::string id;
  double horizon{0.0};
  std::vector<Event> events;
  /// Sequences without events are rejected unless this is set.
  bool allow_empty{false};

  [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
  [[nodiscard]] bool empty() const noexcept { return events.empty(); }
};

/// Throws mocha::Error (NonMonotonicTime, TypeOutOfRange, HorizonViolation or
/// EmptySequence) when `seq` breaks an invariant for a model with `K` types.
void validate_sequence(const EventSequence& seq, int K);

/// Largest type index + 1 over the corpus (0 for an event-free corpus).
[[nodiscard]] int infer_type_count(std::span<const EventSequence> corpus);

/// Mean gap between consecutive events (including the gap from 0 to the first
/// event) over the corpus; 0 when there are no events.
[[nodiscard]] double mean_inter_event_gap(std::span<const EventSequence> corpus);

/// Multiplies every timestamp and horizon by `scale`.
[[nodiscard]] std::vector<EventSequence> rescale_time(std::span<const EventSequence> corpus,
                                                      double scale);

}  // namespace mocha
