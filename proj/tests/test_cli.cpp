#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = urisk::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("urisk_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// labeled synthetic CSV plus theta_ref in dir
void synth(const fs::path& dir, const std::string& n, const std::string& seed, const std::string& dim = "10") {
  const Result r = run({"synth", "--dim", dim, "--n", n, "--py1", "0.7", "--accuracy", "0.9", "--family", "gaussian",
                        "--seed", seed, "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("estimate-risk reports the relative error arithmetic") {
  const fs::path d = fresh_dir("estimate");
  synth(d, "3590", "1");
  const Result r = run({"estimate-risk", "--data", (d / "synth.csv").string(), "--labeled", "--theta",
                        (d / "theta_ref.txt").string(), "--py1", "0.7", "--loss", "log", "--out-dir", d.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  for (const char* key : {"estimate", "n", "p_y", "loss", "mu", "sigma", "asympt_std", "empirical", "abs_err", "rel_err"})
    CHECK(j.contains(key));
  const double est = j["estimate"], emp = j["empirical"];
  CHECK(j["abs_err"].get<double>() == std::abs(emp - est));
  CHECK(j["rel_err"].get<double>() == std::abs(emp - est) / emp);
  CHECK(j["n"] == 3590);
  CHECK(j["p_y"] == 0.7);
  CHECK(j["rel_err"].get<double>() < 0.1);
  CHECK(json::parse(slurp(d / "risk.json")) == j);

  const json m = json::parse(slurp(d / "run_manifest.json"));
  CHECK(m["subcommand"] == "estimate-risk");
  CHECK(m["inputs"].size() == 2);
  CHECK(m["inputs"][0]["fnv1a64"].get<std::string>().size() == 16);
  CHECK(m["config"]["labeled"] == true);
  CHECK(m["wall_time_seconds"].get<double>() >= 0.0);
}

TEST_CASE("unlabeled input omits the empirical fields") {
  const fs::path d = fresh_dir("unlabeled");
  synth(d, "500", "2");
  // drop the label column
  std::ifstream in(d / "synth.csv");
  std::ofstream out(d / "features.csv");
  for (std::string line; std::getline(in, line);) out << line.substr(0, line.rfind(',')) << "\n";
  out.close();
  const Result r = run({"estimate-risk", "--data", (d / "features.csv").string(), "--theta",
                        (d / "theta_ref.txt").string(), "--py1", "0.7", "--out-dir", d.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK_FALSE(j.contains("empirical"));
  CHECK_FALSE(j.contains("rel_err"));
  CHECK(j["n"] == 500);
}

TEST_CASE("errors map to exit codes with a JSON object on stderr") {
  const fs::path d = fresh_dir("errors");
  synth(d, "200", "3");
  const std::string data = (d / "synth.csv").string(), theta = (d / "theta_ref.txt").string();

  const Result no_py = run({"estimate-risk", "--data", data, "--labeled", "--theta", theta, "--out-dir", d.string()});
  CHECK(no_py.code == 1);
  const json e = json::parse(no_py.err);
  CHECK(e["error"] == "config");
  CHECK(e["exit_code"] == 1);
  CHECK(e.contains("usage"));

  CHECK(run({"estimate-risk", "--data", data, "--labeled", "--theta", theta, "--py1", "0.5", "--out-dir", d.string()})
            .code == 1);
  CHECK(run({"estimate-risk", "--data", (d / "missing.csv").string(), "--theta", theta, "--py1", "0.7", "--out-dir",
             d.string()})
            .code == 2);
  // without --labeled the label column is read as a feature
  CHECK(run({"estimate-risk", "--data", data, "--theta", theta, "--py1", "0.7", "--out-dir", d.string()}).code == 2);
  CHECK(run({"estimate-risk", "--bogus"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("train writes theta and a trace") {
  const fs::path d = fresh_dir("train");
  synth(d, "1500", "4", "3");
  const Result r = run({"train", "--data", (d / "synth.csv").string(), "--labeled", "--py1", "0.7", "--max-iter", "4",
                        "--eval-data", (d / "synth.csv").string(), "--seed", "5", "--out-dir", d.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.contains("error_rate"));
  std::ifstream trace(d / "trace.csv");
  std::string line;
  std::getline(trace, line);
  CHECK(line == "iter,risk_unsup,risk_sup,error_rate");
  int expected = 0;
  while (std::getline(trace, line)) {
    CHECK(std::stoi(line.substr(0, line.find(','))) == expected++);
    CHECK(line.find(",,") == std::string::npos);
  }
  CHECK(expected >= 2);
  std::ifstream th(d / "theta.txt");
  int rows = 0;
  for (double v; th >> v;) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("misspec sweep records an unidentifiable row and continues") {
  const fs::path d = fresh_dir("misspec");
  synth(d, "1500", "5", "3");
  const Result r = run({"misspec-sweep", "--data", (d / "synth.csv").string(), "--labeled", "--eval-data",
                        (d / "synth.csv").string(), "--py1-grid", "0.5,0.7", "--max-iter", "3", "--out-dir",
                        d.string()});
  REQUIRE(r.code == 0);
  std::ifstream csv(d / "misspec.csv");
  std::string header, half, good;
  std::getline(csv, header);
  std::getline(csv, half);
  std::getline(csv, good);
  CHECK(header == "assumed_p,risk_unsup,risk_sup,error_rate,error");
  CHECK(half.find("identifiability") != std::string::npos);
  CHECK(std::stod(good.substr(0, good.find(','))) == doctest::Approx(0.7));
  CHECK(good.back() == ',');
}

TEST_CASE("synth is deterministic per seed") {
  const fs::path a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
  synth(a, "100", "9");
  synth(b, "100", "9");
  CHECK(slurp(a / "synth.csv") == slurp(b / "synth.csv"));
  CHECK(slurp(a / "theta_ref.txt") == slurp(b / "theta_ref.txt"));
}

TEST_CASE("asymvar rises along separation") {
  const fs::path d = fresh_dir("asymvar");
  REQUIRE(run({"asymvar", "--axis", "separation", "--grid", "1,2,3", "--out-dir", d.string()}).code == 0);
  std::ifstream csv(d / "accuracy_surface.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,accuracy");
  double prev = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    const double acc = std::stod(line.substr(line.find(',') + 1));
    CHECK(acc > prev);
    prev = acc;
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("normality on Gaussian-family margins") {
  const fs::path d = fresh_dir("normality");
  synth(d, "4000", "6");
  const Result r = run({"normality", "--data", (d / "synth.csv").string(), "--labeled", "--theta",
                        (d / "theta_ref.txt").string(), "--py1", "0.7", "--out-dir", d.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["scaled_statistic"].get<double>() < 2.5);
  CHECK(j["model"] == "mixture");
  CHECK(fs::exists(d / "histogram.csv"));
  CHECK(fs::exists(d / "normality.json"));

  const Result cls = run({"normality", "--data", (d / "synth.csv").string(), "--labeled", "--theta",
                          (d / "theta_ref.txt").string(), "--class", "+1", "--out-dir", d.string()});
  REQUIRE(cls.code == 0);
  CHECK(json::parse(cls.out)["model"] == "gaussian");
}

TEST_CASE("threads fall back to the environment") {
  const fs::path d = fresh_dir("threads");
  ::setenv("UNLABELED_RISK_THREADS", "3", 1);
  REQUIRE(run({"asymvar", "--grid", "0.7", "--out-dir", d.string()}).code == 0);
  CHECK(json::parse(slurp(d / "run_manifest.json"))["config"]["threads"] == 3);
  REQUIRE(run({"asymvar", "--grid", "0.7", "--threads", "2", "--out-dir", d.string()}).code == 0);
  CHECK(json::parse(slurp(d / "run_manifest.json"))["config"]["threads"] == 2);
  ::unsetenv("UNLABELED_RISK_THREADS");
}
