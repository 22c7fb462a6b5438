#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pohmm/matrix.hpp"

namespace pohmm {

using EventId = std::int32_t;

// Marks an event type that is not in the model's alphabet. Scoring routes such
// events through the marginal (event-type-free) parameters.
inline constexpr EventId kNovelEvent = -1;

// Ordered set of event-type labels with a dense id per label.
class EventAlphabet {
 public:
  EventAlphabet() = default;
  // Throws InputError on an empty list or duplicate labels.
  explicit EventAlphabet(std::vector<std::string> symbols);

  // Distinct labels in order of first appearance.
  static EventAlphabet from_sequences(std::span<const std::vector<std::string>> sequences);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(EventId id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<EventId> find(const std::string& label) const;
  // Unknown labels map to kNovelEvent.
  EventId encode(const std::string& label) const;

  friend bool operator==(const EventAlphabet& a, const EventAlphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, EventId> index_;
};

// First-order Markov chain over event types, estimated directly from the
// observed event sequences.
struct EventChain {
  std::vector<double> start;       // P(first event = w)
  Matrix trans;                    // P(next = w | current = psi), m x m
  std::vector<double> stationary;  // empirical frequency of each event type

  std::size_t size() const { return start.size(); }
};

// Counts first symbols, transitions and occurrences over all sequences.
// Rows (and the start vector) get `pseudocount` added to every cell; a row
// that still has zero mass becomes uniform. The stationary vector is the
// pooled empirical frequency and ignores the pseudocount.
EventChain fit_event_chain(std::span<const std::vector<EventId>> sequences, std::size_t alphabet_size,
                           double pseudocount = 0.0);

}  // namespace pohmm
