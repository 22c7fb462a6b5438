#include "pohmm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "pohmm/error.hpp"

namespace pohmm {

namespace {

// Comma-separated fields; a field wrapped in double quotes may contain commas
// and doubled quotes.
std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  std::size_t i = 0;
  while (true) {
    field.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      while (true) {
        if (i >= line.size()) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += line[i++];
      }
      if (i < line.size() && line[i] != ',')
        throw InputError("line " + std::to_string(line_no) + ": text after closing quote");
    } else {
      while (i < line.size() && line[i] != ',') field += line[i++];
    }
    out.push_back(field);
    if (i >= line.size()) break;
    ++i;  // comma
  }
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double parse_number(const std::string& text, const std::string& column, std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw InputError("line " + std::to_string(line_no) + ": column '" + column + "' is not a number: '" + text + "'");
  return value;
}

bool is_number(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

bool natural_less(const std::string& a, const std::string& b) {
  if (is_number(a) && is_number(b)) {
    const auto strip = [](const std::string& s) {
      const auto pos = s.find_first_not_of('0');
      return pos == std::string::npos ? std::string("0") : s.substr(pos);
    };
    const std::string x = strip(a), y = strip(b);
    if (x.size() != y.size()) return x.size() < y.size();
    if (x != y) return x < y;
  }
  return a < b;
}

KeystrokeLog parse_csv(std::istream& in) {
  KeystrokeLog log;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError("missing header row");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line, line_no);

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  const char* required[] = {"user", "session", "key", "t_press", "t_release"};
  for (const char* name : required)
    if (!column.count(name)) throw InputError(std::string("missing column '") + name + "'");
  std::vector<std::size_t> extra_index;
  for (std::size_t k = 0;; ++k) {
    const std::string name = "f" + std::to_string(k);
    auto it = column.find(name);
    if (it == column.end()) break;
    log.extra_columns.push_back(name);
    extra_index.push_back(it->second);
  }

  struct Key {
    std::string user, session;
    bool operator<(const Key& o) const {
      if (user != o.user) return natural_less(user, o.user);
      return natural_less(session, o.session);
    }
  };
  std::map<Key, std::vector<KeystrokeEvent>> groups;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line, line_no);
    if (fields.size() != header.size())
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    KeystrokeEvent ev;
    ev.user = fields[column["user"]];
    ev.session = fields[column["session"]];
    ev.key = fields[column["key"]];
    ev.t_press = parse_number(fields[column["t_press"]], "t_press", line_no);
    ev.t_release = parse_number(fields[column["t_release"]], "t_release", line_no);
    for (std::size_t k = 0; k < extra_index.size(); ++k)
      ev.extra.push_back(parse_number(fields[extra_index[k]], log.extra_columns[k], line_no));
    if (ev.t_release < ev.t_press) {
      log.warnings.push_back("line " + std::to_string(line_no) + ": t_release < t_press, row rejected");
      continue;
    }
    groups[Key{ev.user, ev.session}].push_back(std::move(ev));
  }

  for (auto& [key, events] : groups) {
    std::stable_sort(events.begin(), events.end(),
                     [](const KeystrokeEvent& a, const KeystrokeEvent& b) { return a.t_press < b.t_press; });
    for (auto& ev : events) log.events.push_back(std::move(ev));
  }
  return log;
}

KeystrokeLog load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in);
}

void write_csv(std::ostream& out, const KeystrokeLog& log) {
  out << "user,session,key,t_press,t_release";
  for (const auto& name : log.extra_columns) out << ',' << quote(name);
  out << '\n';
  for (const auto& ev : log.events) {
    out << quote(ev.user) << ',' << quote(ev.session) << ',' << quote(ev.key) << ',' << format_double(ev.t_press) << ','
        << format_double(ev.t_release);
    for (double v : ev.extra) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<Session> group_sessions(const KeystrokeLog& log) {
  std::vector<Session> out;
  for (const auto& ev : log.events) {
    if (out.empty() || out.back().user != ev.user || out.back().session != ev.session)
      out.push_back(Session{ev.user, ev.session, {}});
    out.back().keystrokes.push_back(ev);
  }
  return out;
}

std::vector<KeystrokeSample> to_sequences(const KeystrokeLog& log, const SequenceOptions& options,
                                          std::vector<std::string>* warnings) {
  std::vector<KeystrokeSample> out;
  const std::size_t extras = log.extra_columns.size();
  for (const auto& session : group_sessions(log)) {
    std::size_t k = session.keystrokes.size();
    if (options.max_keystrokes > 0) k = std::min(k, options.max_keystrokes);
    if (k < 2) {
      if (warnings)
        warnings->push_back("session '" + session.session + "' of user '" + session.user +
                            "' has fewer than 2 keystrokes, skipped");
      continue;
    }
    KeystrokeSample sample{session.user, session.session, {}};
    LabeledSequence& seq = sample.sequence;
    seq.features = Matrix(k - 1, 2 + extras);
    for (std::size_t n = 1; n < k; ++n) {
      const KeystrokeEvent& prev = session.keystrokes[n - 1];
      const KeystrokeEvent& cur = session.keystrokes[n];
      seq.events.push_back(cur.key);
      seq.features(n - 1, 0) = std::max(cur.t_press - prev.t_press, kMinInterval);
      seq.features(n - 1, 1) = std::max(cur.t_release - cur.t_press, kMinInterval);
      for (std::size_t e = 0; e < extras; ++e) seq.features(n - 1, 2 + e) = cur.extra[e];
    }
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<double> timing_vector(const Session& session) {
  const auto& ks = session.keystrokes;
  std::vector<double> out;
  if (ks.empty()) return out;
  out.push_back(0.0);
  for (std::size_t n = 1; n < ks.size(); ++n) out.push_back(ks[n].t_press - ks[n - 1].t_press);
  for (std::size_t n = 0; n + 1 < ks.size(); ++n) out.push_back(ks[n].t_release - ks[n].t_press);
  return out;
}

}  // namespace pohmm
