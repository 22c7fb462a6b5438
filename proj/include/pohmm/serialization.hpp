#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "pohmm/estimation.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

// Model file layout (all tables flattened row-major):
//   format, version, n_states, n_features, emission, alphabet
//   startp            m x M
//   trans             (m*M) x (m*M), row psi*M+i, column w*M+j
//   emission.location (m*M) x K, row w*M+j; emission.scale likewise
//   marginal.{start, trans_given_prev ((m*M) x M), trans_given_next, trans,
//             emission.location (M x K), emission.scale, state_stationary}
//   event_chain.{start, trans (m x m), stationary}
// Doubles are written in shortest round-trip form, so save/load is bit-exact.
nlohmann::json to_json(const PohmmParams& params);
// Throws InputError on a malformed or inconsistent document.
PohmmParams params_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const FitReport& report);

void save_model(const PohmmParams& params, const std::string& path);
PohmmParams load_model(const std::string& path);

}  // namespace pohmm
