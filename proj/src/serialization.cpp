#include "pohmm/serialization.hpp"

#include <fstream>

#include "pohmm/error.hpp"

namespace pohmm {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "pohmm-model";
constexpr int kVersion = 1;

std::vector<double> flatten_emission(const std::vector<EmissionParams>& cells, bool location) {
  std::vector<double> out;
  for (const auto& b : cells) {
    const auto& v = location ? b.location : b.scale;
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<double> flatten_blocks(const std::vector<Matrix>& blocks) {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

std::vector<double> get_vector(const json& doc, const char* key, std::size_t expected) {
  if (!doc.contains(key)) throw InputError(std::string("model file is missing '") + key + "'");
  auto v = doc.at(key).get<std::vector<double>>();
  if (v.size() != expected)
    throw InputError(std::string("model field '") + key + "' has " + std::to_string(v.size()) +
                     " entries, expected " + std::to_string(expected));
  return v;
}

Matrix to_matrix(std::vector<double> v, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  out.values() = std::move(v);
  return out;
}

std::vector<EmissionParams> unflatten_emission(const std::vector<double>& loc, const std::vector<double>& scale,
                                               std::size_t cells, std::size_t K, EmissionKind kind) {
  std::vector<EmissionParams> out(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    out[c].kind = kind;
    out[c].location.assign(loc.begin() + static_cast<long>(c * K), loc.begin() + static_cast<long>((c + 1) * K));
    out[c].scale.assign(scale.begin() + static_cast<long>(c * K), scale.begin() + static_cast<long>((c + 1) * K));
  }
  return out;
}

}  // namespace

json to_json(const PohmmParams& p) {
  const std::size_t M = p.n_states;
  const std::size_t m = p.n_events();

  // Conditional transitions as one (m*M) x (m*M) table.
  std::vector<double> trans(m * M * m * M, 0.0);
  for (std::size_t psi = 0; psi < m; ++psi)
    for (std::size_t w = 0; w < m; ++w)
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
          trans[(psi * M + i) * (m * M) + w * M + j] = p.trans[psi * m + w](i, j);

  // Per-event marginal blocks stacked to (m*M) x M.
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["n_states"] = M;
  doc["n_features"] = p.n_features;
  doc["emission"] = to_string(p.kind);
  doc["alphabet"] = p.alphabet.symbols();
  doc["startp"] = p.startp.values();
  doc["trans"] = trans;
  doc["emission_params"] = {{"location", flatten_emission(p.emit, true)},
                            {"scale", flatten_emission(p.emit, false)}};
  doc["marginal"] = {
      {"start", p.marginals.start},
      {"trans_given_prev", flatten_blocks(p.marginals.trans_given_prev)},
      {"trans_given_next", flatten_blocks(p.marginals.trans_given_next)},
      {"trans", p.marginals.trans.values()},
      {"emission_params",
       {{"location", flatten_emission(p.marginals.emit, true)}, {"scale", flatten_emission(p.marginals.emit, false)}}},
      {"state_stationary", p.marginals.state_stationary}};
  doc["event_chain"] = {{"start", p.event_chain.start},
                        {"trans", p.event_chain.trans.values()},
                        {"stationary", p.event_chain.stationary}};
  return doc;
}

PohmmParams params_from_json(const json& doc) {
  try {
    if (doc.value("format", std::string()) != kFormat) throw InputError("not a pohmm model file");
    if (doc.value("version", 0) != kVersion) throw InputError("unsupported model file version");
    const auto M = doc.at("n_states").get<std::size_t>();
    const auto K = doc.at("n_features").get<std::size_t>();
    const EmissionKind kind = emission_kind_from_string(doc.at("emission").get<std::string>());
    EventAlphabet alphabet(doc.at("alphabet").get<std::vector<std::string>>());
    const std::size_t m = alphabet.size();

    PohmmParams p(M, alphabet, kind, K);
    p.startp = to_matrix(get_vector(doc, "startp", m * M), m, M);
    const auto trans = get_vector(doc, "trans", m * M * m * M);
    for (std::size_t psi = 0; psi < m; ++psi)
      for (std::size_t w = 0; w < m; ++w)
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j)
            p.trans[psi * m + w](i, j) = trans[(psi * M + i) * (m * M) + w * M + j];
    const json& e = doc.at("emission_params");
    p.emit = unflatten_emission(get_vector(e, "location", m * M * K), get_vector(e, "scale", m * M * K), m * M, K, kind);

    const json& c = doc.at("event_chain");
    p.event_chain.start = get_vector(c, "start", m);
    p.event_chain.trans = to_matrix(get_vector(c, "trans", m * m), m, m);
    p.event_chain.stationary = get_vector(c, "stationary", m);

    const json& g = doc.at("marginal");
    Marginals& mg = p.marginals;
    mg.start = get_vector(g, "start", M);
    const auto prev = get_vector(g, "trans_given_prev", m * M * M);
    const auto next = get_vector(g, "trans_given_next", m * M * M);
    for (std::size_t w = 0; w < m; ++w) {
      mg.trans_given_prev[w].values().assign(prev.begin() + static_cast<long>(w * M * M),
                                             prev.begin() + static_cast<long>((w + 1) * M * M));
      mg.trans_given_next[w].values().assign(next.begin() + static_cast<long>(w * M * M),
                                             next.begin() + static_cast<long>((w + 1) * M * M));
    }
    mg.trans = to_matrix(get_vector(g, "trans", M * M), M, M);
    const json& ge = g.at("emission_params");
    mg.emit = unflatten_emission(get_vector(ge, "location", M * K), get_vector(ge, "scale", M * K), M, K, kind);
    mg.state_stationary = get_vector(g, "state_stationary", M);

    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

json to_json(const FitReport& report) {
  return {{"iterations", report.iterations},
          {"converged", report.converged},
          {"final_loglik", report.final_loglik},
          {"loglik_trace", report.loglik_trace}};
}

void save_model(const PohmmParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << to_json(params).dump(1) << '\n';
}

PohmmParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError("malformed model file '" + path + "': " + e.what());
  }
  return params_from_json(doc);
}

}  // namespace pohmm
