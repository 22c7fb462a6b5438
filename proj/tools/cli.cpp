#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pohmm/benchmark.hpp"
#include "pohmm/dataset.hpp"
#include "pohmm/error.hpp"
#include "pohmm/estimation.hpp"
#include "pohmm/gof.hpp"
#include "pohmm/inference.hpp"
#include "pohmm/serialization.hpp"
#include "pohmm/simulation.hpp"

using namespace pohmm;
using nlohmann::json;

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Quotes a CSV field when it contains a separator, quote or newline.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Writes to a file, or stdout when the path is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw InputError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct FitFlags {
  std::size_t states = 2;
  std::string emission = "lognormal";
  double epsilon = 1e-6;
  std::size_t max_iter = 1000;
  bool smoothing = true;
  double pseudocount = 0.0;
  double bandwidth = 2.0;

  void add(CLI::App* app) {
    app->add_option("--states", states, "hidden states per event type")->capture_default_str();
    app->add_option("--emission", emission, "lognormal or normal")->capture_default_str();
    app->add_option("--epsilon", epsilon, "loglik gain stopping threshold")->capture_default_str();
    app->add_option("--max-iter", max_iter, "EM iteration limit")->capture_default_str();
    app->add_option("--smoothing", smoothing, "parameter smoothing (on/off)")->capture_default_str();
    app->add_option("--pseudocount", pseudocount, "event chain pseudocount")->capture_default_str();
    app->add_option("--bandwidth", bandwidth, "initial state spread in sd units")->capture_default_str();
  }

  FitConfig config() const {
    FitConfig c;
    c.n_states = states;
    c.kind = emission_kind_from_string(emission);
    c.epsilon = epsilon;
    c.max_iter = max_iter;
    c.smoothing = smoothing;
    c.pseudocount = pseudocount;
    c.bandwidth = bandwidth;
    c.check();
    return c;
  }
};

struct DataFlags {
  std::string input;
  std::string user;
  std::size_t max_keystrokes = 0;

  void add(CLI::App* app) {
    app->add_option("--input", input, "keystroke CSV")->required();
    app->add_option("--user", user, "only use this user's sessions");
    app->add_option("--max-keystrokes", max_keystrokes, "truncate sessions (0 = keep all)");
  }

  std::vector<KeystrokeSample> load() const {
    KeystrokeLog log = load_csv(input);
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
    std::vector<std::string> warnings;
    auto samples = to_sequences(log, SequenceOptions{max_keystrokes}, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (!user.empty())
      std::erase_if(samples, [&](const KeystrokeSample& s) { return s.user != user; });
    if (samples.empty()) throw InputError("no usable sequences in '" + input + "'");
    return samples;
  }
};

void run_fit(const DataFlags& data, const FitFlags& flags, const std::string& output, const std::string& report_path) {
  auto samples = data.load();
  std::vector<LabeledSequence> seqs;
  for (auto& s : samples) seqs.push_back(std::move(s.sequence));
  auto result = fit(std::span<const LabeledSequence>(seqs), flags.config());
  if (!result.report.converged) std::cerr << "warning: EM stopped at the iteration limit\n";
  {
    Output out(output);
    out.stream() << to_json(result.params).dump(1) << "\n";
  }
  json report = to_json(result.report);
  if (report_path.empty() && !output.empty()) {
    std::cout << report.dump(1) << "\n";
  } else if (!report_path.empty()) {
    Output out(report_path);
    out.stream() << report.dump(1) << "\n";
  }
}

void run_loglik(const DataFlags& data, const std::string& model_path, const std::string& output) {
  PohmmParams model = load_model(model_path);
  auto samples = data.load();
  Output out(output);
  out.stream() << "user,session,length,loglik\n";
  for (const auto& s : samples) {
    double ll = loglik(model, encode(model.alphabet, s.sequence));
    out.stream() << field(s.user) << "," << field(s.session) << "," << s.sequence.size() << "," << real(ll) << "\n";
  }
}

void run_states(const DataFlags& data, const std::string& model_path, const std::string& output) {
  PohmmParams model = load_model(model_path);
  auto samples = data.load();
  Output out(output);
  out.stream() << "user,session,step,key,state\n";
  for (const auto& s : samples) {
    auto states = predict_states(model, encode(model.alphabet, s.sequence));
    for (std::size_t n = 0; n < states.size(); ++n)
      out.stream() << field(s.user) << "," << field(s.session) << "," << n + 1 << "," << field(s.sequence.events[n])
                   << "," << states[n] << "\n";
  }
}

void run_sample(const std::string& model_path, std::size_t length, std::size_t sessions, const std::string& user,
                std::uint64_t seed, const std::string& output) {
  PohmmParams model = load_model(model_path);
  if (model.n_features < 2) throw InputError("sampling keystrokes needs a model with (tau, d) features");
  if (length == 0 || sessions == 0) throw InputError("--length and --sessions must be positive");
  KeystrokeLog log;
  for (std::size_t k = 2; k < model.n_features; ++k) log.extra_columns.push_back("f" + std::to_string(k - 2));
  const Rng root(seed);
  for (std::size_t s = 0; s < sessions; ++s) {
    Rng rng = root.substream(s);
    auto drawn = sample(model, length, rng);
    const auto& x = drawn.sequence.features;
    const std::string session = std::to_string(s + 1);
    // The anchor keystroke only fixes the first latency; it reuses the first key.
    KeystrokeEvent anchor{user, session, model.alphabet.symbol(drawn.sequence.events[0]), 0.0,
                          kMinInterval, std::vector<double>(log.extra_columns.size(), 0.0)};
    log.events.push_back(anchor);
    double t = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
      t += x(n, 0);
      KeystrokeEvent e{user, session, model.alphabet.symbol(drawn.sequence.events[n]), t, t + x(n, 1), {}};
      for (std::size_t k = 2; k < model.n_features; ++k) e.extra.push_back(x(n, k));
      log.events.push_back(std::move(e));
    }
  }
  Output out(output);
  write_csv(out.stream(), log);
}

void run_gof(const DataFlags& data, const FitFlags& flags, std::size_t surrogates, std::uint64_t seed,
             const std::string& output) {
  auto samples = data.load();
  GofConfig config;
  config.fit = flags.config();
  config.surrogates = surrogates;
  if (surrogates == 0) throw InputError("--S must be positive");
  const Rng root(seed);
  json records = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::vector<std::vector<std::string>> labels{s.sequence.events};
    EventAlphabet alphabet = EventAlphabet::from_sequences(labels);
    auto result = monte_carlo_gof(encode(alphabet, s.sequence), alphabet, config, root.substream(i));
    records.push_back(json{{"user", s.user},
                           {"session", s.session},
                           {"A", result.a_empirical},
                           {"S", surrogates},
                           {"p_value", result.p_value},
                           {"A_surrogates", result.a_surrogates}});
  }
  Output out(output);
  out.stream() << records.dump(1) << "\n";
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text, const char* flag) {
  auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = std::stoul(text.substr(0, colon));
    std::size_t b = std::stoul(text.substr(colon + 1));
    return {a, b};
  } catch (const std::exception&) {
    throw InputError(std::string(flag) + " expects BEGIN:END, got '" + text + "'");
  }
}

void write_benchmark(const BenchmarkReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create '" + dir + "': " + ec.message());
  const fs::path root(dir);

  std::ofstream summary(root / "summary.csv", std::ios::binary);
  summary << "detector,acc_mean,acc_sd,acc_ci95,eer_mean,eer_sd,eer_ci95\n";
  std::ofstream roc(root / "roc.csv", std::ios::binary);
  roc << "detector,user,threshold,far,frr\n";
  std::ofstream amrt(root / "amrt.csv", std::ios::binary);
  amrt << "detector,amrt_mean,amrt_sd,amrt_ci95\n";
  json users = json::object();
  users["folds"] = report.folds;
  json detectors = json::array();

  for (const auto& d : report.detectors) {
    summary << field(d.name) << "," << real(d.acc.mean) << "," << real(d.acc.sd) << "," << real(d.acc.ci95) << ","
            << real(d.eer.mean) << "," << real(d.eer.sd) << "," << real(d.eer.ci95) << "\n";
    if (d.has_amrt)
      amrt << field(d.name) << "," << real(d.amrt.mean) << "," << real(d.amrt.sd) << "," << real(d.amrt.ci95) << "\n";
    json per_user = json::array();
    for (const auto& u : d.users) {
      for (std::size_t k = 0; k < u.roc.thresholds.size(); ++k)
        roc << field(d.name) << "," << field(u.user) << "," << real(u.roc.thresholds[k]) << "," << real(u.roc.far[k])
            << "," << real(u.roc.frr[k]) << "\n";
      json rec{{"user", u.user}, {"acc", u.acc}, {"eer", u.eer}};
      if (d.has_amrt) rec["amrt"] = u.amrt;
      per_user.push_back(rec);
    }
    detectors.push_back(json{{"detector", d.name}, {"users", per_user}});
  }
  users["detectors"] = detectors;
  std::ofstream(root / "users.json", std::ios::binary) << users.dump(1) << "\n";
  if (!summary || !roc || !amrt) throw InputError("failed writing benchmark tables to '" + dir + "'");
}

void run_benchmark_cmd(const DataFlags& data, const FitFlags& flags, const std::string& protocol,
                       const std::string& train, const std::string& test, std::size_t window, bool continuous,
                       const std::string& output) {
  if (output.empty()) throw InputError("benchmark needs --output DIR");
  KeystrokeLog log = load_csv(data.input);
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

  std::vector<BenchmarkSample> samples;
  for (auto& session : group_sessions(log)) {
    if (!data.user.empty() && session.user != data.user) continue;
    if (data.max_keystrokes && session.keystrokes.size() > data.max_keystrokes)
      session.keystrokes.resize(data.max_keystrokes);
    if (session.keystrokes.size() < 2) {
      std::cerr << "warning: session " << session.user << "/" << session.session << " has fewer than 2 keystrokes\n";
      continue;
    }
    KeystrokeLog one;
    one.extra_columns = log.extra_columns;
    one.events = session.keystrokes;
    auto seqs = to_sequences(one);
    samples.push_back(BenchmarkSample{session.user, std::move(seqs.front().sequence), timing_vector(session)});
  }
  if (samples.empty()) throw InputError("no usable sessions in '" + data.input + "'");

  BenchmarkConfig config;
  config.fit = flags.config();
  config.window = window;
  config.continuous = continuous;
  if (protocol == "crossfold") {
    config.protocol = Protocol::crossfold;
  } else if (protocol == "split") {
    config.protocol = Protocol::split;
    std::tie(config.train_begin, config.train_end) = parse_range(train, "--train");
    std::tie(config.test_begin, config.test_end) = parse_range(test, "--test");
  } else {
    throw InputError("--protocol must be crossfold or split");
  }
  write_benchmark(run_benchmark(samples, config), output);
}

void run_simulate(int scenario, const std::vector<std::size_t>& lengths, std::size_t replicates,
                  const std::vector<double>& offsets, double scale, const FitFlags& flags, std::uint64_t seed,
                  const std::string& output) {
  ScenarioConfig config;
  config.scenario = scenario;
  if (!lengths.empty()) config.lengths = lengths;
  config.replicates = replicates;
  config.truth = default_generator(offsets, scale);
  config.fit = flags.config();
  config.seed = seed;
  auto report = run_scenario(config);

  Output out(output);
  auto& os = out.stream();
  os << "scenario,N,parameter,truth,mean_estimate,mean_residual,stderr,studentized,mean_abs_residual,unit,"
        "accuracy,replicates,failed\n";
  for (const auto& p : report.points)
    for (const auto& s : p.parameters)
      os << report.scenario << "," << p.length << "," << field(s.name) << "," << real(s.truth) << ","
         << real(s.mean_estimate) << "," << real(s.mean_residual) << "," << real(s.stderr_) << ","
         << real(s.studentized) << "," << real(s.mean_abs_residual) << "," << real(s.unit) << ","
         << real(p.accuracy) << "," << p.replicates << "," << p.failed << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Partially observable hidden Markov models for keystroke data"};
  app.name("pohmm");
  app.require_subcommand(1);

  FitFlags fit_flags;
  DataFlags data;
  std::string output, model_path, report_path;
  std::uint64_t seed = 0;

  auto* fit_cmd = app.add_subcommand("fit", "fit one model to every sequence in a keystroke CSV");
  data.add(fit_cmd);
  fit_flags.add(fit_cmd);
  fit_cmd->add_option("--output", output, "model JSON (stdout when omitted)");
  fit_cmd->add_option("--report", report_path, "fit report JSON");

  auto* loglik_cmd = app.add_subcommand("loglik", "per-sequence log-likelihood CSV");
  data.add(loglik_cmd);
  loglik_cmd->add_option("--model", model_path)->required();
  loglik_cmd->add_option("--output", output);

  auto* states_cmd = app.add_subcommand("states", "posterior hidden-state decoding CSV");
  data.add(states_cmd);
  states_cmd->add_option("--model", model_path)->required();
  states_cmd->add_option("--output", output);

  std::size_t length = 100, sessions = 1;
  std::string sample_user = "sim";
  auto* sample_cmd = app.add_subcommand("sample", "draw synthetic keystroke sessions from a model");
  sample_cmd->add_option("--model", model_path)->required();
  sample_cmd->add_option("--length", length, "events per session")->capture_default_str();
  sample_cmd->add_option("--sessions", sessions)->capture_default_str();
  sample_cmd->add_option("--user", sample_user)->capture_default_str();
  sample_cmd->add_option("--seed", seed)->required();
  sample_cmd->add_option("--output", output);

  std::size_t surrogates = 99;
  auto* gof_cmd = app.add_subcommand("gof", "Monte Carlo goodness of fit per session");
  data.add(gof_cmd);
  fit_flags.add(gof_cmd);
  gof_cmd->add_option("--S", surrogates, "surrogate count")->capture_default_str();
  gof_cmd->add_option("--seed", seed)->required();
  gof_cmd->add_option("--output", output);

  std::string protocol = "crossfold", train_range, test_range;
  std::size_t window = kPenaltyWindow;
  bool continuous = true;
  auto* bench_cmd = app.add_subcommand("benchmark", "identification, verification and continuous verification");
  data.add(bench_cmd);
  fit_flags.add(bench_cmd);
  bench_cmd->add_option("--protocol", protocol, "crossfold or split")->capture_default_str();
  bench_cmd->add_option("--train", train_range, "split: training ordinals BEGIN:END");
  bench_cmd->add_option("--test", test_range, "split: test ordinals BEGIN:END");
  bench_cmd->add_option("--window", window, "continuous penalty window")->capture_default_str();
  bench_cmd->add_option("--continuous", continuous, "compute AMRT (on/off)")->capture_default_str();
  bench_cmd->add_option("--output", output, "directory for the result tables")->required();

  int scenario = 1;
  std::vector<std::size_t> lengths;
  std::size_t replicates = 100;
  std::vector<double> offsets{-20.0, 0.0, 20.0};
  double scale = 50.0;
  FitFlags sim_flags;
  sim_flags.emission = "normal";
  auto* sim_cmd = app.add_subcommand("simulate", "parameter recovery scenarios");
  sim_cmd->add_option("--scenario", scenario, "1-4")->capture_default_str();
  sim_cmd->add_option("--lengths", lengths, "sequence lengths (default 128 512 2048 4096)")->delimiter(',');
  sim_cmd->add_option("--replicates", replicates)->capture_default_str();
  sim_cmd->add_option("--offsets", offsets, "per-event-type location offsets")->delimiter(',');
  sim_cmd->add_option("--scale", scale, "emission scale")->capture_default_str();
  sim_flags.add(sim_cmd);
  sim_cmd->add_option("--seed", seed)->required();
  sim_cmd->add_option("--output", output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) run_fit(data, fit_flags, output, report_path);
    else if (*loglik_cmd) run_loglik(data, model_path, output);
    else if (*states_cmd) run_states(data, model_path, output);
    else if (*sample_cmd) run_sample(model_path, length, sessions, sample_user, seed, output);
    else if (*gof_cmd) run_gof(data, fit_flags, surrogates, seed, output);
    else if (*bench_cmd)
      run_benchmark_cmd(data, fit_flags, protocol, train_range, test_range, window, continuous, output);
    else if (*sim_cmd) run_simulate(scenario, lengths, replicates, offsets, scale, sim_flags, seed, output);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
