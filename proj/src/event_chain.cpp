#include "pohmm/event_chain.hpp"

#include "pohmm/error.hpp"

namespace pohmm {

EventAlphabet::EventAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw InputError("event alphabet is empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto [it, inserted] = index_.emplace(symbols_[i], static_cast<EventId>(i));
    if (!inserted) throw InputError("duplicate event label '" + symbols_[i] + "'");
  }
}

EventAlphabet EventAlphabet::from_sequences(std::span<const std::vector<std::string>> sequences) {
  std::vector<std::string> symbols;
  std::unordered_map<std::string, bool> seen;
  for (const auto& seq : sequences)
    for (const auto& label : seq)
      if (seen.emplace(label, true).second) symbols.push_back(label);
  return EventAlphabet(std::move(symbols));
}

std::optional<EventId> EventAlphabet::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EventId EventAlphabet::encode(const std::string& label) const {
  return find(label).value_or(kNovelEvent);
}

namespace {

void normalize_or_uniform(std::span<double> row) {
  double total = 0.0;
  for (double v : row) total += v;
  if (total > 0.0) {
    for (double& v : row) v /= total;
  } else {
    for (double& v : row) v = 1.0 / static_cast<double>(row.size());
  }
}

}  // namespace

EventChain fit_event_chain(std::span<const std::vector<EventId>> sequences, std::size_t alphabet_size,
                           double pseudocount) {
  if (alphabet_size == 0) throw InputError("event alphabet is empty");
  if (pseudocount < 0.0) throw InputError("pseudocount must be nonnegative");
  const std::size_t m = alphabet_size;

  EventChain chain;
  chain.start.assign(m, pseudocount);
  chain.trans = Matrix(m, m, pseudocount);
  chain.stationary.assign(m, 0.0);

  std::size_t total = 0;
  for (const auto& seq : sequences) {
    for (EventId id : seq)
      if (id < 0 || static_cast<std::size_t>(id) >= m) throw InputError("symbol out of alphabet");
    if (seq.empty()) continue;
    chain.start[static_cast<std::size_t>(seq.front())] += 1.0;
    for (std::size_t n = 0; n < seq.size(); ++n) {
      chain.stationary[static_cast<std::size_t>(seq[n])] += 1.0;
      if (n + 1 < seq.size())
        chain.trans(static_cast<std::size_t>(seq[n]), static_cast<std::size_t>(seq[n + 1])) += 1.0;
    }
    total += seq.size();
  }
  if (total == 0) throw InputError("no sequences");

  normalize_or_uniform(chain.start);
  for (std::size_t r = 0; r < m; ++r) normalize_or_uniform(chain.trans.row(r));
  for (double& v : chain.stationary) v /= static_cast<double>(total);
  return chain;
}

}  // namespace pohmm
