#include "etpde/app/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace etpde::app {
namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ValidationError("config field '" + path + "': " + what);
}

const json* find(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& section(const json& doc, const std::string& key) {
  static const json empty = json::object();
  const json* s = find(doc, key);
  if (!s) return empty;
  if (!s->is_object()) field_error(key, "must be an object");
  return *s;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) field_error(path, "missing");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(path, "must be finite");
  return x;
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) field_error(path, "must be an integer");
  return v.get<int>();
}

void read(const json& obj, const std::string& key, const std::string& path, double& out) {
  if (const json* v = find(obj, key)) out = as_number(*v, path);
}

void read(const json& obj, const std::string& key, const std::string& path, int& out) {
  if (const json* v = find(obj, key)) out = as_int(*v, path);
}

void read(const json& obj, const std::string& key, const std::string& path, std::string& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) field_error(path, "must be a string");
    out = v->get<std::string>();
  }
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) field_error(path, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ProfileSpec parse_profile(const json& v, const std::string& path) {
  ProfileSpec p;
  if (v.is_number()) {
    p.value = as_number(v, path);
    return p;
  }
  if (!v.is_object()) field_error(path, "must be a number or a profile object");
  p.kind = "";
  read(v, "kind", path + ".kind", p.kind);
  if (p.kind == "constant") {
    p.value = as_number(require(v, "value", path + ".value"), path + ".value");
  } else if (p.kind == "samples") {
    p.values = number_list(require(v, "values", path + ".values"), path + ".values");
    if (p.values.size() < 2) field_error(path + ".values", "needs at least 2 samples");
  } else if (p.kind == "piecewise") {
    const json& pieces = require(v, "pieces", path + ".pieces");
    if (!pieces.is_array()) field_error(path + ".pieces", "must be an array of [x0, x1, value]");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const std::string at = path + ".pieces[" + std::to_string(i) + "]";
      const auto row = number_list(pieces[i], at);
      if (row.size() != 3 || !(row[0] < row[1])) field_error(at, "must be [x0, x1, value] with x0 < x1");
      p.pieces.push_back({row[0], row[1], row[2]});
    }
  } else if (p.kind == "eigenfunction") {
    p.index = as_int(require(v, "index", path + ".index"), path + ".index");
    if (p.index < 1) field_error(path + ".index", "must be >= 1");
  } else if (p.kind.empty()) {
    field_error(path + ".kind", "missing");
  } else {
    field_error(path + ".kind", "unknown profile kind '" + p.kind + "'");
  }
  return p;
}

json profile_json(const ProfileSpec& p) {
  json j{{"kind", p.kind}};
  if (p.kind == "constant") j["value"] = p.value;
  if (p.kind == "samples") j["values"] = p.values;
  if (p.kind == "piecewise") j["pieces"] = p.pieces;
  if (p.kind == "eigenfunction") j["index"] = p.index;
  return j;
}

}  // namespace

Vec<double> ProfileSpec::sample(double length, Index n, const EigenSystem<double>* eig) const {
  Vec<double> out(n);
  const Vec<double> x = Vec<double>::LinSpaced(n, 0.0, length);
  if (kind == "constant") {
    out.setConstant(value);
  } else if (kind == "samples") {
    const double h = length / double(values.size() - 1);
    for (Index i = 0; i < n; ++i) {
      const auto cell = std::min<std::size_t>(static_cast<std::size_t>(x(i) / h), values.size() - 2);
      const double frac = std::clamp(x(i) / h - double(cell), 0.0, 1.0);
      out(i) = (1 - frac) * values[cell] + frac * values[cell + 1];
    }
  } else if (kind == "piecewise") {
    out.setZero();
    for (Index i = 0; i < n; ++i)
      for (const auto& [x0, x1, v] : pieces)
        if (x(i) >= x0 && x(i) <= x1) out(i) = v;
  } else if (kind == "eigenfunction") {
    if (!eig) throw ValidationError("eigenfunction profile requires the eigensystem");
    if (index > eig->count())
      throw ValidationError("eigenfunction index " + std::to_string(index) + " exceeds the truncation order");
    if (eig->grid_size() != n) throw ValidationError("eigenfunction profile: grid mismatch");
    out = eig->functions.col(index - 1);
  } else {
    throw ValidationError("unknown profile kind '" + kind + "'");
  }
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  if (const json* s = find(doc, "seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      field_error("seed", "must be a nonnegative integer");
    c.seed = s->get<std::uint64_t>();
  }

  const json& problem = section(doc, "problem");
  c.length = as_number(require(problem, "length", "problem.length"), "problem.length");
  if (!(c.length > 0)) field_error("problem.length", "must be positive");
  if (const json* g = find(problem, "grid_points")) {
    c.grid_points = as_int(*g, "problem.grid_points");
    if (*c.grid_points < 16) field_error("problem.grid_points", "must be >= 16");
  }
  c.reaction = parse_profile(require(problem, "reaction", "problem.reaction"), "problem.reaction");
  if (c.reaction.needs_eigenfunctions()) field_error("problem.reaction", "cannot be an eigenfunction profile");
  const json& inputs = require(problem, "inputs", "problem.inputs");
  if (!inputs.is_array() || inputs.empty()) field_error("problem.inputs", "must be a nonempty array of profiles");
  for (std::size_t k = 0; k < inputs.size(); ++k)
    c.inputs.push_back(parse_profile(inputs[k], "problem.inputs[" + std::to_string(k) + "]"));
  if (const json* a = find(problem, "asymptotic_correction")) {
    if (!a->is_boolean()) field_error("problem.asymptotic_correction", "must be a boolean");
    c.asymptotic_correction = a->get<bool>();
  }

  const json& trunc = section(doc, "truncation");
  c.modes = as_int(require(trunc, "modes", "truncation.modes"), "truncation.modes");
  if (c.modes < 1) field_error("truncation.modes", "must be >= 1");
  read(trunc, "eta_fraction", "truncation.eta_fraction", c.eta_fraction);
  if (!(c.eta_fraction > 0 && c.eta_fraction < 1)) field_error("truncation.eta_fraction", "must lie in (0, 1)");
  if (c.grid_points && *c.grid_points < 4 * c.modes)
    field_error("problem.grid_points", "must be at least 4 * truncation.modes");

  const json& design = section(doc, "design");
  read(design, "margin", "design.margin", c.margin);
  if (!(c.margin > 0)) field_error("design.margin", "must be positive");

  const json& nl = section(doc, "nonlinearity");
  c.nonlinearity = "";
  read(nl, "kind", "nonlinearity.kind", c.nonlinearity);
  if (c.nonlinearity.empty()) field_error("nonlinearity.kind", "missing");
  try {
    parse_nonlinearity_kind(c.nonlinearity);
  } catch (const ValidationError&) {
    field_error("nonlinearity.kind", "unknown kind '" + c.nonlinearity + "'");
  }
  read(nl, "delta", "nonlinearity.delta", c.delta);
  read(nl, "width", "nonlinearity.width", c.width);
  if (!(c.delta >= 0 && c.delta <= 1)) field_error("nonlinearity.delta", "must lie in [0, 1]");
  if (!(c.width > 0)) field_error("nonlinearity.width", "must be positive");

  const json& cert = section(doc, "certificate");
  read(cert, "xi_fraction", "certificate.xi_fraction", c.xi_fraction);
  read(cert, "zeta_fraction", "certificate.zeta_fraction", c.zeta_fraction);
  read(cert, "tau_max", "certificate.tau_max", c.tau_max);
  read(cert, "tau_tolerance", "certificate.tau_tolerance", c.tau_tolerance);
  read(cert, "power_trials", "certificate.power_trials", c.power_trials);
  read(cert, "power_steps", "certificate.power_steps", c.power_steps);
  if (!(c.xi_fraction > 0 && c.xi_fraction < 1)) field_error("certificate.xi_fraction", "must lie in (0, 1)");
  if (!(c.zeta_fraction > 0 && c.zeta_fraction < 1)) field_error("certificate.zeta_fraction", "must lie in (0, 1)");
  if (!(c.tau_max > 0)) field_error("certificate.tau_max", "must be positive");
  if (!(c.tau_tolerance > 0)) field_error("certificate.tau_tolerance", "must be positive");
  if (c.power_trials < 1) field_error("certificate.power_trials", "must be >= 1");
  if (c.power_steps < 8) field_error("certificate.power_steps", "must be >= 8");

  const json& sampling = section(doc, "sampling");
  if (const json* t = find(sampling, "tau")) {
    if (t->is_string()) {
      if (t->get<std::string>() != "auto") field_error("sampling.tau", "must be a number or \"auto\"");
    } else {
      c.tau = as_number(*t, "sampling.tau");
      if (!(*c.tau > 0)) field_error("sampling.tau", "must be positive");
    }
  }
  read(sampling, "safety", "sampling.safety", c.tau_safety);
  if (!(c.tau_safety > 0 && c.tau_safety < 1)) field_error("sampling.safety", "must lie in (0, 1)");

  const json& trigger = section(doc, "trigger");
  read(trigger, "sigma", "trigger.sigma", c.sigma);
  read(trigger, "test_divisions", "trigger.test_divisions", c.test_divisions);
  if (!(c.sigma > 0 && c.sigma < 1)) field_error("trigger.sigma", "must lie in (0, 1)");
  if (c.test_divisions < 1) field_error("trigger.test_divisions", "must be >= 1");

  const json& sim = section(doc, "simulation");
  if (const json* t = find(sim, "t_end")) {
    if (t->is_string()) {
      if (t->get<std::string>() != "auto") field_error("simulation.t_end", "must be a number or \"auto\"");
    } else {
      c.t_end = as_number(*t, "simulation.t_end");
      if (!(*c.t_end > 0)) field_error("simulation.t_end", "must be positive");
    }
  }
  read(sim, "output_per_tau", "simulation.output_per_tau", c.output_per_tau);
  if (c.output_per_tau < 1) field_error("simulation.output_per_tau", "must be >= 1");
  if (const json* init = find(sim, "initial_state")) {
    const std::string path = "simulation.initial_state";
    if (!init->is_object()) field_error(path, "must be an object");
    c.initial.kind = "";
    read(*init, "kind", path + ".kind", c.initial.kind);
    if (c.initial.kind == "random") {
      read(*init, "norm", path + ".norm", c.initial.norm);
      if (!(c.initial.norm >= 0)) field_error(path + ".norm", "must be nonnegative");
    } else if (c.initial.kind == "modal") {
      c.initial.modal = number_list(require(*init, "values", path + ".values"), path + ".values");
    } else if (c.initial.kind == "profile") {
      c.initial.profile = parse_profile(require(*init, "profile", path + ".profile"), path + ".profile");
    } else if (c.initial.kind.empty()) {
      field_error(path + ".kind", "missing");
    } else {
      field_error(path + ".kind", "unknown initial state kind '" + c.initial.kind + "'");
    }
  }

  const json& dist = section(doc, "disturbance");
  read(dist, "kind", "disturbance.kind", c.disturbance.kind);
  try {
    parse_disturbance_kind(c.disturbance.kind);
  } catch (const ValidationError&) {
    field_error("disturbance.kind", "unknown kind '" + c.disturbance.kind + "'");
  }
  read(dist, "amplitude", "disturbance.amplitude", c.disturbance.amplitude);
  read(dist, "omega", "disturbance.omega", c.disturbance.omega);
  read(dist, "phase", "disturbance.phase", c.disturbance.phase);
  read(dist, "center", "disturbance.center", c.disturbance.center);
  read(dist, "width", "disturbance.width", c.disturbance.width);
  read(dist, "rate", "disturbance.rate", c.disturbance.rate);
  read(dist, "mode", "disturbance.mode", c.disturbance.mode);
  if (!(c.disturbance.width > 0)) field_error("disturbance.width", "must be positive");
  if (c.disturbance.mode < 0 || c.disturbance.mode > c.modes)
    field_error("disturbance.mode", "must lie in [0, truncation.modes]");

  const json& verify = section(doc, "verify");
  read(verify, "dissipation_t_end", "verify.dissipation_t_end", c.dissipation_t_end);
  read(verify, "dissipation_output_step", "verify.dissipation_output_step", c.dissipation_output_step);
  read(verify, "ugas_eta", "verify.ugas_eta", c.ugas_eta);
  read(verify, "ugas_epsilon", "verify.ugas_epsilon", c.ugas_epsilon);
  if (!(c.dissipation_t_end > 0)) field_error("verify.dissipation_t_end", "must be positive");
  if (!(c.dissipation_output_step > 0)) field_error("verify.dissipation_output_step", "must be positive");
  if (!(c.ugas_eta > 0)) field_error("verify.ugas_eta", "must be positive");
  if (!(c.ugas_epsilon > 0)) field_error("verify.ugas_epsilon", "must be positive");

  const json& output = section(doc, "output");
  read(output, "directory", "output.directory", c.output_directory);
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' must be path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].empty()) throw ValidationError("override '" + assignment + "' has an empty path segment");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ValidationError("override '" + assignment + "' descends into a non-object");
    node = &(*node)[keys[i]];
  }
  *node = std::move(value);
}

json to_json(const ExperimentConfig& c) {
  json inputs = json::array();
  for (const auto& p : c.inputs) inputs.push_back(profile_json(p));
  json problem{{"length", c.length},
               {"reaction", profile_json(c.reaction)},
               {"inputs", inputs},
               {"asymptotic_correction", c.asymptotic_correction}};
  if (c.grid_points) problem["grid_points"] = *c.grid_points;
  json initial{{"kind", c.initial.kind}};
  if (c.initial.kind == "random") initial["norm"] = c.initial.norm;
  if (c.initial.kind == "modal") initial["values"] = c.initial.modal;
  if (c.initial.kind == "profile") initial["profile"] = profile_json(c.initial.profile);
  return json{
      {"seed", c.seed},
      {"problem", problem},
      {"truncation", {{"modes", c.modes}, {"eta_fraction", c.eta_fraction}}},
      {"design", {{"margin", c.margin}}},
      {"nonlinearity", {{"kind", c.nonlinearity}, {"delta", c.delta}, {"width", c.width}}},
      {"certificate",
       {{"xi_fraction", c.xi_fraction},
        {"zeta_fraction", c.zeta_fraction},
        {"tau_max", c.tau_max},
        {"tau_tolerance", c.tau_tolerance},
        {"power_trials", c.power_trials},
        {"power_steps", c.power_steps}}},
      {"sampling", {{"tau", c.tau ? json(*c.tau) : json("auto")}, {"safety", c.tau_safety}}},
      {"trigger", {{"sigma", c.sigma}, {"test_divisions", c.test_divisions}}},
      {"simulation",
       {{"initial_state", initial},
        {"t_end", c.t_end ? json(*c.t_end) : json("auto")},
        {"output_per_tau", c.output_per_tau}}},
      {"disturbance",
       {{"kind", c.disturbance.kind},
        {"amplitude", c.disturbance.amplitude},
        {"omega", c.disturbance.omega},
        {"phase", c.disturbance.phase},
        {"center", c.disturbance.center},
        {"width", c.disturbance.width},
        {"rate", c.disturbance.rate},
        {"mode", c.disturbance.mode}}},
      {"verify",
       {{"dissipation_t_end", c.dissipation_t_end},
        {"dissipation_output_step", c.dissipation_output_step},
        {"ugas_eta", c.ugas_eta},
        {"ugas_epsilon", c.ugas_epsilon}}},
      {"output", {{"directory", c.output_directory}}}};
}

}  // namespace etpde::app
