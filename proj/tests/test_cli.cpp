#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "pohmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "pohmm_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_dataset(const fs::path& path) {
  std::ofstream out(path);
  out << "user,session,key,t_press,t_release\n";
  const char* keys = "abcab";
  for (int u = 0; u < 2; ++u)
    for (int s = 0; s < 3; ++s) {
      double t = 0.0;
      for (int k = 0; k < 40; ++k) {
        t += 80.0 + 37.0 * ((k * 7 + s * 3 + u * 5) % 11) + (k % 9 == 0 ? 600.0 : 0.0);
        out << "u" << u << "," << s << "," << keys[k % 5] << "," << t << "," << t + 60.0 + 9.0 * ((k + u) % 7) << "\n";
      }
    }
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}) == 2);
  CHECK(run({"fit", "--bogus"}) == 2);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({"sample", "--model", "m.json"}) == 2);  // seed is required
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("input errors exit with 2") {
  auto dir = scratch();
  CHECK(run({"fit", "--input", (dir / "missing.csv").string()}) == 2);
  std::ofstream(dir / "bad.csv") << "user,session,key,t_press\nu,1,a,5\n";
  CHECK(run({"fit", "--input", (dir / "bad.csv").string()}) == 2);
  CHECK(run({"loglik", "--model", (dir / "none.json").string(), "--input", (dir / "bad.csv").string()}) == 2);
}

TEST_CASE("sample, fit and loglik pipeline") {
  auto dir = scratch();
  write_dataset(dir / "data.csv");
  const auto data = (dir / "data.csv").string();
  const auto model = (dir / "model.json").string();
  REQUIRE(run({"fit", "--input", data, "--output", model, "--report", (dir / "report.json").string()}) == 0);
  CHECK(slurp(dir / "report.json").find("loglik_trace") != std::string::npos);
  REQUIRE(run({"sample", "--model", model, "--seed", "7", "--length", "50", "--sessions", "2", "--output",
               (dir / "synthetic.csv").string()}) == 0);
  REQUIRE(run({"fit", "--input", (dir / "synthetic.csv").string(), "--output", (dir / "refit.json").string(),
               "--report", (dir / "refit_report.json").string()}) == 0);
  REQUIRE(run({"loglik", "--model", (dir / "refit.json").string(), "--input", data, "--output",
               (dir / "ll.csv").string()}) == 0);
  auto ll = slurp(dir / "ll.csv");
  CHECK(ll.rfind("user,session,length,loglik\n", 0) == 0);
  CHECK(std::count(ll.begin(), ll.end(), '\n') == 7);
  REQUIRE(run({"states", "--model", model, "--input", data, "--output", (dir / "states.csv").string()}) == 0);
  auto st = slurp(dir / "states.csv");
  CHECK(std::count(st.begin(), st.end(), '\n') == 1 + 6 * 39);
}

TEST_CASE("same seed gives identical bytes") {
  auto dir = scratch();
  write_dataset(dir / "data.csv");
  const auto data = (dir / "data.csv").string();
  for (const char* name : {"g1.json", "g2.json"})
    REQUIRE(run({"gof", "--input", data, "--S", "4", "--seed", "9", "--output", (dir / name).string()}) == 0);
  CHECK(slurp(dir / "g1.json") == slurp(dir / "g2.json"));
  CHECK(slurp(dir / "g1.json").find("p_value") != std::string::npos);
  for (const char* name : {"s1.csv", "s2.csv"})
    REQUIRE(run({"simulate", "--scenario", "3", "--lengths", "64,128", "--replicates", "3", "--seed", "1", "--output",
                 (dir / name).string()}) == 0);
  CHECK(slurp(dir / "s1.csv") == slurp(dir / "s2.csv"));
}

TEST_CASE("benchmark writes its tables") {
  auto dir = scratch();
  write_dataset(dir / "data.csv");
  REQUIRE(run({"benchmark", "--input", (dir / "data.csv").string(), "--max-iter", "30", "--output",
               (dir / "bench").string()}) == 0);
  for (const char* f : {"summary.csv", "roc.csv", "amrt.csv", "users.json"}) CHECK(fs::exists(dir / "bench" / f));
  auto summary = slurp(dir / "bench" / "summary.csv");
  CHECK(summary.find("POHMM") != std::string::npos);
  CHECK(summary.find("Manhattan (scaled)") != std::string::npos);
  CHECK(run({"benchmark", "--input", (dir / "data.csv").string(), "--protocol", "split", "--train", "0:2", "--test",
             "x", "--output", (dir / "bench2").string()}) == 2);
}
