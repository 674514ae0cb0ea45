#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpde/etpde.hpp"

namespace etpde::app {

using json = nlohmann::json;

/// Spatial profile on [0, L]:
///   constant      {"kind": "constant", "value": v}   (a bare number also works)
///   samples       {"kind": "samples", "values": [...]}, uniform on [0, L], interpolated
///   piecewise     {"kind": "piecewise", "pieces": [[x0, x1, v], ...]}
///   eigenfunction {"kind": "eigenfunction", "index": j}  (1-based)
struct ProfileSpec {
  std::string kind = "constant";
  double value = 0;
  std::vector<double> values;
  std::vector<std::array<double, 3>> pieces;
  int index = 1;

  bool needs_eigenfunctions() const { return kind == "eigenfunction"; }
  /// Samples on the uniform grid of n points over [0, length].
  Vec<double> sample(double length, Index n, const EigenSystem<double>* eig = nullptr) const;
};

struct InitialStateSpec {
  std::string kind = "random";  // random | modal | profile
  double norm = 1;              // random: target Euclidean norm of the modal vector
  std::vector<double> modal;
  ProfileSpec profile;
};

struct DisturbanceSpec {
  std::string kind = "sinusoid";
  double amplitude = 0.1;
  double omega = 2;
  double phase = 0;
  double center = 1;
  double width = 0.5;
  double rate = 0.5;
  int mode = 1;  // direction e_mode; 0 means the normalized all-ones vector
};

struct ExperimentConfig {
  std::uint64_t seed = 1;

  double length = 1;
  std::optional<int> grid_points;  // default 8 J
  ProfileSpec reaction;
  std::vector<ProfileSpec> inputs;
  bool asymptotic_correction = true;

  int modes = 16;
  double eta_fraction = 0.5;

  double margin = 1;  // xi_0

  std::string nonlinearity = "identity";
  double delta = 0;
  double width = 1;

  double xi_fraction = 0.9;
  double zeta_fraction = 0.5;
  double tau_max = 2;
  double tau_tolerance = 1e-3;
  int power_trials = 100;
  int power_steps = 200;

  std::optional<double> tau;  // empty: safety * tau_star
  double tau_safety = 0.5;

  double sigma = 0.5;
  int test_divisions = 50;

  InitialStateSpec initial;
  std::optional<double> t_end;  // empty: 20 / chi
  int output_per_tau = 5;

  DisturbanceSpec disturbance;
  double dissipation_t_end = 5;
  double dissipation_output_step = 0.05;

  double ugas_eta = 1;
  double ugas_epsilon = 1e-2;

  std::string output_directory = "out";
};

/// Parses and validates a configuration document. Errors name the offending
/// field, e.g. "config field 'problem.length': missing".
ExperimentConfig parse_config(const json& doc);

json read_json_file(const std::string& path);

/// Applies "a.b.c=value" to the document; value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(json& doc, const std::string& assignment);

/// Canonical JSON form of the effective configuration.
json to_json(const ExperimentConfig& cfg);

}  // namespace etpde::app
