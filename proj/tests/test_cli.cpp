#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "etpde/app/pipeline.hpp"

using namespace etpde;
using namespace etpde::app;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "seed": 3,
    "problem": {"length": 1.0, "reaction": 10.0, "inputs": [{"kind": "eigenfunction", "index": 1}]},
    "truncation": {"modes": 8},
    "nonlinearity": {"kind": "tanh-blend", "delta": 0.05},
    "certificate": {"tau_max": 2.0},
    "sampling": {"tau": 0.1},
    "simulation": {"t_end": 4.0},
    "verify": {"dissipation_t_end": 1.0}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("etpde_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("missing and malformed fields are named") {
  for (const char* path : {"/problem/length", "/problem/reaction", "/problem/inputs", "/truncation/modes",
                           "/nonlinearity/kind"}) {
    json doc = small_config();
    const json::json_pointer ptr(path);
    doc.at(ptr.parent_pointer()).erase(ptr.back());
    const std::string err = error_of(doc);
    std::string dotted = std::string(path).substr(1);
    std::replace(dotted.begin(), dotted.end(), '/', '.');
    CAPTURE(path);
    CHECK(err.find("'" + dotted + "'") != std::string::npos);
  }
  json doc = small_config();
  doc["truncation"]["modes"] = "many";
  CHECK(error_of(doc).find("truncation.modes") != std::string::npos);
  doc = small_config();
  doc["nonlinearity"]["kind"] = "cubic";
  CHECK(error_of(doc).find("nonlinearity.kind") != std::string::npos);
  doc = small_config();
  doc["trigger"]["sigma"] = 1.5;
  CHECK(error_of(doc).find("trigger.sigma") != std::string::npos);
  doc = small_config();
  doc["problem"]["length"] = -1;
  CHECK(error_of(doc).find("problem.length") != std::string::npos);
}

TEST_CASE("overrides and canonical form") {
  json doc = small_config();
  apply_override(doc, "trigger.sigma=0.25");
  apply_override(doc, "sampling.tau=auto");
  apply_override(doc, "output.directory=results/a");
  apply_override(doc, "new.section.value=[1,2]");
  CHECK(doc["trigger"]["sigma"] == 0.25);
  CHECK(doc["sampling"]["tau"] == "auto");
  CHECK(doc["output"]["directory"] == "results/a");
  CHECK(doc["new"]["section"]["value"].size() == 2);
  CHECK_THROWS_AS(apply_override(doc, "no-equals-sign"), ValidationError);

  doc.erase("new");
  const auto cfg = parse_config(doc);
  CHECK(cfg.sigma == 0.25);
  CHECK_FALSE(cfg.tau.has_value());
  CHECK(to_json(parse_config(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("stage names") {
  CHECK(parse_stage("run") == Stage::Verify);
  CHECK(parse_stage("eig") == Stage::Eig);
  CHECK(to_string(Stage::Certify) == "certify");
  CHECK_THROWS(parse_stage("plot"));
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("pipeline runs are deterministic and complete") {
  const auto cfg = parse_config(small_config());
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const auto ra = run_pipeline(cfg, Stage::Verify, a.string());
  const auto rb = run_pipeline(cfg, Stage::Verify, b.string());
  REQUIRE(ra.exit_code == kSuccess);
  REQUIRE(rb.exit_code == kSuccess);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
  CHECK(files == 12);
  const json& s = ra.summary;
  CHECK(s["status"] == "ok");
  CHECK(s["certificate"]["vartheta"].get<double>() < 1);
  CHECK(s["simulation"]["count_et"].get<long long>() < s["simulation"]["count_sampled"].get<long long>());
}

TEST_CASE("early stages write only their artifacts") {
  const auto cfg = parse_config(small_config());
  const fs::path dir = scratch("eig");
  const auto r = run_pipeline(cfg, Stage::Eig, dir.string());
  CHECK(r.exit_code == kSuccess);
  CHECK(fs::exists(dir / "eigenvalues.csv"));
  CHECK_FALSE(fs::exists(dir / "gain.csv"));
}

TEST_CASE("failures carry exit codes and the failing stage") {
  json doc = small_config();
  doc["problem"]["grid_points"] = 20;
  CHECK(error_of(doc).find("problem.grid_points") != std::string::npos);
  doc = small_config();
  doc["problem"]["reaction"] = 1e4;  // every retained mode unstable
  const auto r = run_pipeline(parse_config(doc), Stage::Verify, scratch("fail").string());
  CHECK(r.exit_code == kValidation);
  CHECK(r.summary["failed_stage"] == "design");
  CHECK(r.summary["error"].get<std::string>().find("unstable") != std::string::npos);
  CHECK(r.summary["status"] == "error");

  json unstable = small_config();
  unstable["problem"]["inputs"] = json::array({json{{"kind", "eigenfunction"}, {"index", 2}}});
  const auto u = run_pipeline(parse_config(unstable), Stage::Verify, scratch("uncontrollable").string());
  CHECK(u.exit_code == kValidation);
  CHECK(u.summary["failed_stage"] == "design");
}

TEST_CASE("small-gain failure is a warning") {
  json doc = small_config();
  doc["nonlinearity"]["delta"] = 0.9;
  const auto r = run_pipeline(parse_config(doc), Stage::Verify, scratch("smallgain").string());
  CHECK(r.exit_code == kSuccess);
  REQUIRE(r.summary["warnings"].size() >= 1);
  CHECK(r.summary["warnings"][0].get<std::string>().find("small-gain") != std::string::npos);
}

TEST_CASE("sweeps") {
  const auto cfg = parse_config(small_config());
  const fs::path dir = scratch("sweep");
  CHECK(run_sweep(cfg, "sigma", {}, 2, dir.string()).empty());
  CHECK(fs::exists(dir / "sweep.csv"));
  const auto rows = run_sweep(cfg, "sigma", {0.2, 0.8}, 2, dir.string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].value == 0.2);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status == "ok");
  CHECK_THROWS_AS(run_sweep(cfg, "colour", {1.0}, 1, dir.string()), ValidationError);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("binary");
  fs::create_directories(dir);
  json doc = small_config();
  std::ofstream(dir / "ok.json") << doc.dump();
  doc["problem"].erase("length");
  std::ofstream(dir / "missing.json") << doc.dump();
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(ETPDE_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("eig --config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()) == 0);
  CHECK(run("eig --config " + (dir / "missing.json").string()) == 2);
  CHECK(slurp(dir / "log.txt").find("problem.length") != std::string::npos);
  CHECK(run("certify --config " + (dir / "ok.json").string() + " --out " + (dir / "o2").string() +
            " --set sampling.tau=5 --set certificate.tau_max=0.0001") != 0);
}
