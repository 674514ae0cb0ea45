// Command-line experiment runner.
//
//   etpde <subcommand> --config cfg.json [--out dir] [--seed n] [--set path=value]...
//
// Subcommands eig, design, certify, simulate, verify and run stop after the
// named stage; sweep repeats the full pipeline over one parameter axis.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "etpde/app/pipeline.hpp"

namespace {

using etpde::app::json;

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw etpde::ValidationError("sweep value '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered control of reaction-diffusion PDEs: modal design, certificates, simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  long long seed = -1;
  int jobs = 1;
  std::string axis;
  std::string values;

  std::vector<CLI::App*> stages;
  for (const char* name : {"eig", "design", "certify", "simulate", "verify", "run"}) {
    auto* sub = app.add_subcommand(name, std::string("run the pipeline through the '") + name + "' stage");
    stages.push_back(sub);
  }
  auto* sweep = app.add_subcommand("sweep", "repeat the pipeline over one parameter axis");
  sweep->add_option("--axis", axis, "tau, sigma, delta or J")->required();
  sweep->add_option("--values", values, "comma-separated values (may be empty)")->required();
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  stages.push_back(sweep);

  for (auto* sub : stages) {
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "root random seed (overrides seed)")->check(CLI::NonNegativeNumber);
    sub->add_option("--set", overrides, "override a config key: path.to.key=value");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    json doc = etpde::app::read_json_file(config_path);
    for (const auto& o : overrides) etpde::app::apply_override(doc, o);
    if (seed >= 0) doc["seed"] = seed;
    if (!out_dir.empty()) doc["output"]["directory"] = out_dir;
    const auto cfg = etpde::app::parse_config(doc);

    if (sweep->parsed()) {
      const auto rows = etpde::app::run_sweep(cfg, axis, parse_values(values), jobs, cfg.output_directory);
      int failed = 0;
      for (const auto& r : rows) failed += r.status != "ok";
      std::cout << "sweep: " << rows.size() << " cells, " << failed << " failed; table in "
                << cfg.output_directory << "/sweep.csv\n";
      return etpde::app::kSuccess;
    }

    std::string name;
    for (auto* sub : stages)
      if (sub->parsed()) name = sub->get_name();
    const auto result = etpde::app::run_pipeline(cfg, etpde::app::parse_stage(name), cfg.output_directory);
    const json& s = result.summary;
    for (const auto& w : s["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    if (result.exit_code != etpde::app::kSuccess) {
      std::cerr << "error in stage '" << s.value("failed_stage", "?") << "': " << s.value("error", "") << '\n';
      return result.exit_code;
    }
    std::cout << name << ": ok; summary in " << cfg.output_directory << "/summary.json\n";
    return etpde::app::kSuccess;
  } catch (const etpde::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return etpde::app::kValidation;
  } catch (const etpde::CertificationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return etpde::app::kCertification;
  } catch (const etpde::SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return etpde::app::kSimulation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return etpde::app::kFailure;
  }
}
