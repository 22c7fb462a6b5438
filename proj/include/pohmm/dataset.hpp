#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pohmm/model.hpp"

namespace pohmm {

// One key press. Timestamps are milliseconds; `extra` holds the optional
// f0..fk columns in column order.
struct KeystrokeEvent {
  std::string user;
  std::string session;
  std::string key;
  double t_press = 0.0;
  double t_release = 0.0;
  std::vector<double> extra;

  friend bool operator==(const KeystrokeEvent&, const KeystrokeEvent&) = default;
};

struct KeystrokeLog {
  std::vector<std::string> extra_columns;  // names of f0..fk columns present
  std::vector<KeystrokeEvent> events;      // grouped by (user, session), press order
  std::vector<std::string> warnings;       // rejected rows
};

// Header: user,session,key,t_press,t_release[,f0,...,fk] in any column
// order. Rows with t_release < t_press are rejected with a warning naming the
// line. Events are grouped by (user, session) in natural order, and stably
// sorted by press time within a session.
KeystrokeLog parse_csv(std::istream& in);
KeystrokeLog load_csv(const std::string& path);
void write_csv(std::ostream& out, const KeystrokeLog& log);

// Lower bound (ms) applied to every derived interval and duration.
inline constexpr double kMinInterval = 1.0;

struct Session {
  std::string user;
  std::string session;
  std::vector<KeystrokeEvent> keystrokes;
};

std::vector<Session> group_sessions(const KeystrokeLog& log);

struct KeystrokeSample {
  std::string user;
  std::string session;
  LabeledSequence sequence;
};

struct SequenceOptions {
  std::size_t max_keystrokes = 0;  // truncate each session first; 0 = keep all
};

// Features per step n >= 2: press-press latency tau_n, hold duration d_n, then
// the extra columns of keystroke n. The first keystroke only anchors tau_2, so
// a session of k keystrokes yields k - 1 steps labeled with keys 2..k.
// Sessions with fewer than 2 keystrokes are skipped with a warning.
std::vector<KeystrokeSample> to_sequences(const KeystrokeLog& log, const SequenceOptions& options = {},
                                          std::vector<std::string>* warnings = nullptr);

// Fixed-length timing vector of a session of k keystrokes: k press-press
// latencies (the first is 0 since no earlier press exists) followed by the
// first k - 1 hold durations, for 2k - 1 entries (21 for 11 keystrokes).
std::vector<double> timing_vector(const Session& session);

// Orders numeric strings numerically, otherwise lexicographically.
bool natural_less(const std::string& a, const std::string& b);

}  // namespace pohmm
