#include "etpde/app/pipeline.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <thread>

namespace etpde::app {

namespace fs = std::filesystem;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Stage parse_stage(std::string_view name) {
  if (name == "eig") return Stage::Eig;
  if (name == "design") return Stage::Design;
  if (name == "certify") return Stage::Certify;
  if (name == "simulate") return Stage::Simulate;
  if (name == "verify" || name == "run") return Stage::Verify;
  throw ValidationError("unknown stage '" + std::string(name) + "'");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Eig: return "eig";
    case Stage::Design: return "design";
    case Stage::Certify: return "certify";
    case Stage::Simulate: return "simulate";
    case Stage::Verify: return "verify";
  }
  return "unknown";
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << format_number(cells[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> numbered(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

json vec_json(const Vec<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Mat<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

struct Pipeline {
  Pipeline(const ExperimentConfig& c, fs::path d) : cfg(c), dir(std::move(d)) {}

  const ExperimentConfig& cfg;
  fs::path dir;
  json summary = json::object();
  json files = json::array();
  json warnings = json::array();

  // stage products
  SpatialProblem<double> problem;
  EigenSystem<double> eig;
  ModalModel<double> model;
  FeedbackGain<double> gain;
  Mat<double> a_cl;
  SemigroupCertificate<double> cert;
  SectorNonlinearity<double> f;
  double theta = 0;
  double tau = 0;
  double tau_star = 0;
  double env_gain = 1, env_rate = 0;
  std::optional<LyapunovOracle<double>> oracle;
  std::optional<IterateReport<double>> report;
  Vec<double> x0;
  double t_end = 0;
  SimulationRecord<double> sampled;
  std::optional<TriggeredRun<double>> triggered;

  void declare(const std::string& name) { files.push_back(name); }
  void warn(const std::string& text) { warnings.push_back(text); }

  void stage_eig() {
    const Index modes = cfg.modes;
    const Index n = cfg.grid_points ? *cfg.grid_points : 8 * modes;
    if (n < 4 * modes) throw ValidationError("problem.grid_points must be at least 4 * truncation.modes");
    problem.length = cfg.length;
    problem.reaction = cfg.reaction.sample(cfg.length, n);
    problem.inputs = Mat<double>::Zero(n, static_cast<Index>(cfg.inputs.size()));
    EigenOptions opt;
    opt.asymptotic_correction = cfg.asymptotic_correction;
    eig = solve_eigensystem(problem, modes, opt);
    for (std::size_t k = 0; k < cfg.inputs.size(); ++k)
      problem.inputs.col(static_cast<Index>(k)) = cfg.inputs[k].sample(cfg.length, n, &eig);
    problem.validate();

    {
      CsvWriter csv(dir / "eigenvalues.csv", {"j", "lambda_j"});
      for (Index j = 0; j < eig.count(); ++j) csv.row(std::vector<double>{double(j + 1), eig.values(j)});
    }
    declare("eigenvalues.csv");
    {
      std::vector<std::string> header{"x"};
      for (auto& s : numbered("e_", eig.count())) header.push_back(s);
      CsvWriter csv(dir / "eigenfunctions.csv", header);
      const Vec<double> x = eig.grid();
      for (Index i = 0; i < eig.grid_size(); ++i) {
        std::vector<double> row{x(i)};
        for (Index j = 0; j < eig.count(); ++j) row.push_back(eig.functions(i, j));
        csv.row(row);
      }
    }
    declare("eigenfunctions.csv");
    Index unstable = 0;
    while (unstable < eig.count() && eig.values(unstable) >= 0) ++unstable;
    summary["eig"] = {{"modes", eig.count()},
                      {"grid_points", eig.grid_size()},
                      {"unstable", unstable},
                      {"lambda_1", eig.values(0)},
                      {"orthonormality_residual", eig.orthonormality_residual()}};
  }

  void stage_design() {
    model = build_modal_model(problem, eig, cfg.eta_fraction);
    gain = design_gain(model, cfg.margin);
    a_cl = closed_loop_matrix(model, gain);
    {
      std::vector<std::string> header{"input"};
      for (auto& s : numbered("f_", model.dim())) header.push_back(s);
      CsvWriter csv(dir / "gain.csv", header);
      for (Index i = 0; i < gain.lifted.rows(); ++i) {
        std::vector<double> row{double(i + 1)};
        for (Index j = 0; j < gain.lifted.cols(); ++j) row.push_back(gain.lifted(i, j));
        csv.row(row);
      }
    }
    declare("gain.csv");
    const json design{{"unstable", model.unstable},
                      {"eta", model.margin},
                      {"margin", cfg.margin},
                      {"state_weight", gain.state_weight},
                      {"K", mat_json(gain.block)},
                      {"gain_norm", gain.norm()},
                      {"input_norm", spectral_norm(model.input)},
                      {"unstable_eigenvalues", vec_json(model.eigenvalues.head(model.unstable))},
                      {"closed_loop_abscissa", spectral_abscissa(a_cl)}};
    write_json(dir / "design.json", design);
    declare("design.json");
    summary["design"] = design;
  }

  void stage_certify() {
    cert = certify_semigroups(model, gain, cfg.xi_fraction);
    f = SectorNonlinearity<double>(parse_nonlinearity_kind(cfg.nonlinearity), cfg.delta, cfg.width);
    const auto sector = certify_sector(f, gain.norm());
    theta = sector.theta;
    const auto small_gain = check_small_gain(theta, cert.open_gain, cert.closed_gain, cert.input_norm, cert.closed_rate);
    if (!small_gain.pass)
      warn("small-gain condition fails (theta_f = " + format_number(theta) + " >= xi / beta = " +
           format_number(small_gain.bound) + "); continuing with empirical checks");

    TauSearchOptions search;
    search.tolerance = cfg.tau_tolerance;
    search.stability.trials = cfg.power_trials;
    search.stability.steps = cfg.power_steps;
    search.stability.seed = derive_seed(cfg.seed, "power_stability");
    const auto found = find_tau_star(model, gain, f, cfg.tau_max, search);
    tau_star = found.tau_star;
    tau = cfg.tau ? *cfg.tau : cfg.tau_safety * tau_star;
    if (cfg.tau && !found.clamped && tau >= tau_star)
      warn("sampling.tau = " + format_number(tau) + " is not below the estimated tau* = " + format_number(tau_star));

    const auto power = verify_power_stability(model, gain, f, tau, search.stability);
    if (!power.pass)
      throw CertificationError("sampled map is not power stable at tau = " + format_number(tau) + ": " + power.message +
                               " (trial " + std::to_string(power.witness_trial) + ")");
    const auto sampled_env = sampled_decay_constants(power.q, power.prefactor, tau, model, gain, theta);
    const auto contraction = contraction_envelope(model, gain, theta, tau);
    const auto norm_step = equivalent_norm_contraction(model, gain, cert, theta, tau);

    env_gain = sampled_env.gain;
    env_rate = sampled_env.rate;
    std::string source = "sampled-data";
    if (contraction.valid &&
        contraction.gain * std::exp(-contraction.rate * tau) < sampled_env.gain * std::exp(-sampled_env.rate * tau)) {
      env_gain = contraction.gain;
      env_rate = contraction.rate;
      source = "one-step-contraction";
    }

    json lyap = nullptr;
    json iterate = nullptr;
    if (theta * cert.beta / cert.open_gain < cert.closed_rate) {
      oracle = build_oracle(cert, a_cl, theta, cfg.zeta_fraction);
      lyap = {{"zeta", oracle->zeta},
              {"ell", oracle->ell},
              {"horizon", oracle->horizon()},
              {"grid_points", oracle->norm.grid_points()}};
      report = make_iterate_report(env_gain, env_rate, oracle->ell, cert.closed_gain, cfg.sigma, tau, source);
      iterate = {{"vartheta", report->vartheta}, {"iota", report->iota}, {"certified", report->certified()}};
    } else {
      warn("Lyapunov construction skipped: theta_f beta / M >= xi");
    }

    const json doc{
        {"semigroup",
         {{"M", cert.open_gain},
          {"nu", cert.open_rate},
          {"N", cert.closed_gain},
          {"xi", cert.closed_rate},
          {"input_norm", cert.input_norm},
          {"beta", cert.beta},
          {"closed_loop_abscissa", cert.closed_abscissa}}},
        {"sector",
         {{"kind", std::string(to_string(f.kind))},
          {"delta", f.delta},
          {"theta", theta},
          {"empirical_ratio", sector.empirical_ratio},
          {"small_gain_bound", small_gain.bound},
          {"small_gain_margin", small_gain.margin},
          {"small_gain_pass", small_gain.pass}}},
        {"sampling",
         {{"tau_star", tau_star},
          {"tau_star_clamped", found.clamped},
          {"tau", tau},
          {"q", power.q},
          {"L", power.prefactor},
          {"linear_spectral_radius", power.linear_radius},
          {"equivalent_norm_q", norm_step.q}}},
        {"envelope",
         {{"G", env_gain},
          {"chi", env_rate},
          {"source", source},
          {"sampled_data", {{"G", sampled_env.gain}, {"chi", sampled_env.rate}, {"A_hat", sampled_env.a_hat}}},
          {"one_step_contraction",
           {{"valid", contraction.valid}, {"c_tau", contraction.one_step}, {"G", contraction.gain}, {"chi", contraction.rate}}}}},
        {"lyapunov", lyap},
        {"iterate", iterate}};
    write_json(dir / "certificate.json", doc);
    declare("certificate.json");
    summary["certificate"] = {{"tau_star", tau_star}, {"tau", tau},       {"q", power.q},
                              {"chi", env_rate},     {"G", env_gain},     {"theta", theta},
                              {"small_gain_pass", small_gain.pass},       {"N", cert.closed_gain},
                              {"vartheta", report ? json(report->vartheta) : json(nullptr)}};
  }

  Vec<double> initial_state() const {
    const auto& spec = cfg.initial;
    if (spec.kind == "modal") {
      if (static_cast<Index>(spec.modal.size()) != model.dim())
        throw ValidationError("config field 'simulation.initial_state.values': expected " +
                              std::to_string(model.dim()) + " modal coefficients");
      return Eigen::Map<const Vec<double>>(spec.modal.data(), model.dim());
    }
    if (spec.kind == "profile")
      return project_profile(eig, spec.profile.sample(cfg.length, eig.grid_size(), &eig));
    std::mt19937_64 rng(derive_seed(cfg.seed, "initial_state"));
    return spec.norm * random_unit_vector<double>(model.dim(), rng);
  }

  void write_trajectory(const std::string& name, const SimulationRecord<double>& rec) {
    std::vector<std::string> header{"t"};
    for (auto& s : numbered("w_", model.dim())) header.push_back(s);
    for (auto& s : numbered("u_", model.input_count())) header.push_back(s);
    for (const char* s : {"V", "trigger_lhs", "trigger_rhs", "envelope"}) header.push_back(s);
    CsvWriter csv(dir / name, header);
    for (std::size_t i = 0; i < rec.size(); ++i) {
      std::vector<double> row{rec.times[i]};
      for (Index j = 0; j < rec.states[i].size(); ++j) row.push_back(rec.states[i](j));
      for (Index j = 0; j < rec.inputs[i].size(); ++j) row.push_back(rec.inputs[i](j));
      row.insert(row.end(), {rec.lyapunov[i], rec.trigger_lhs[i], rec.trigger_rhs[i], rec.envelope[i]});
      csv.row(row);
    }
    declare(name);
  }

  void write_events(const std::string& name, const std::vector<Event<double>>& events) {
    CsvWriter csv(dir / name, {"k", "t_k", "inter_event_time", "reason"});
    for (const auto& e : events)
      csv.row(std::vector<std::string>{std::to_string(e.k), format_number(e.time), format_number(e.gap), e.reason});
    declare(name);
  }

  void stage_simulate() {
    x0 = initial_state();
    t_end = cfg.t_end ? *cfg.t_end : 20.0 / env_rate;
    if (t_end < tau) t_end = tau;
    SampledOptions sopt;
    sopt.output_step = tau / cfg.output_per_tau;
    sampled = simulate_sampled(model, gain, f, tau, x0, t_end, sopt);
    const double x0_norm = x0.norm();
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      if (oracle) sampled.lyapunov[i] = (*oracle)(sampled.states[i]);
      sampled.envelope[i] = env_gain * std::exp(-env_rate * sampled.times[i]) * x0_norm;
    }
    write_trajectory("trajectory_sampled.csv", sampled);
    write_events("events_sampled.csv", sampled.events);
    json sim{{"t_end", t_end}, {"x0_norm", x0_norm}, {"sampled_updates", sampled.events.size()}};

    if (oracle) {
      TriggerConfig<double> tc;
      tc.tau = tau;
      tc.sigma = cfg.sigma;
      tc.test_step = tau / cfg.test_divisions;
      tc.envelope_gain = env_gain;
      tc.envelope_rate = env_rate;
      TriggeredOptions topt;
      topt.output_step = tau / cfg.output_per_tau;
      triggered = simulate_et(model, gain, f, tc, *oracle, x0, t_end, topt);
      write_trajectory("trajectory_et.csv", triggered->record);
      write_events("events_et.csv", triggered->record.events);
      const auto counts = compare_update_counts<double>(tau, t_end, triggered->record.events.size());
      double min_gap = std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < triggered->record.events.size(); ++k)
        min_gap = std::min(min_gap, triggered->record.events[k].gap);
      sim["count_sampled"] = counts.sampled;
      sim["count_et"] = counts.triggered;
      sim["savings_percent"] = 100.0 * counts.savings;
      sim["min_inter_event_time"] = std::isfinite(min_gap) ? json(min_gap) : json(nullptr);
    } else {
      warn("event-triggered run skipped: no Lyapunov function available");
    }
    summary["simulation"] = sim;
  }

  void stage_verify() {
    json verify = json::object();
    // sampled-data envelope
    const double x0_norm = x0.norm();
    double worst = 0;
    for (std::size_t i = 0; i < sampled.size(); ++i)
      if (x0_norm > 0) worst = std::max(worst, sampled.states[i].norm() / sampled.envelope[i]);
    verify["sampled_envelope_max_ratio"] = worst;
    verify["sampled_envelope"] = worst <= 1 + 1e-6 ? "pass" : "fail";

    if (oracle && report && triggered) {
      const auto check = check_corollary(*report, triggered->record.events);
      const auto counts = compare_update_counts<double>(tau, t_end, triggered->record.events.size());
      bool between_safe = true;
      for (const auto& t : triggered->tests)
        if (!t.fired && !(t.lhs < t.rhs) && t.lhs > 0) between_safe = false;
      json iterate{{"G", report->G},
                   {"chi", report->chi},
                   {"ell", report->ell},
                   {"N", report->N},
                   {"sigma", report->sigma},
                   {"tau", report->tau},
                   {"a1", report->a1},
                   {"a2", report->a2},
                   {"a3", report->a3},
                   {"p", report->p},
                   {"vartheta", report->vartheta},
                   {"iota", report->iota},
                   {"envelope_source", report->envelope_source},
                   {"decay_exponent_in_vartheta", "chi"},
                   {"verdict", std::string(to_string(check.verdict))},
                   {"iterate_chain", check.iterate_chain},
                   {"exponential_bound", check.exponential},
                   {"max_chain_ratio", check.max_chain_ratio},
                   {"max_exponential_ratio", check.max_exp_ratio},
                   {"measured_rate", std::isfinite(check.measured_rate) ? json(check.measured_rate) : json(nullptr)},
                   {"events", check.events},
                   {"count_sampled", counts.sampled},
                   {"count_et", counts.triggered},
                   {"savings_percent", 100.0 * counts.savings},
                   {"between_events_safe", between_safe}};
      if (!check.note.empty()) iterate["note"] = check.note;
      if (report->certified()) {
        const auto w = ugas_witness(*report, cfg.ugas_eta, cfg.ugas_epsilon);
        iterate["ugas"] = {{"eta", cfg.ugas_eta},
                           {"epsilon", cfg.ugas_epsilon},
                           {"N_prime", w.n_prime},
                           {"J_prime", w.j_prime},
                           {"T", w.horizon}};
      }
      write_json(dir / "iterate.json", iterate);
      declare("iterate.json");
      verify["corollary"] = std::string(to_string(check.verdict));
      verify["between_events_safe"] = between_safe;
      verify["savings_percent"] = 100.0 * counts.savings;

      Disturbance<double> d;
      d.kind = parse_disturbance_kind(cfg.disturbance.kind);
      d.amplitude = cfg.disturbance.amplitude;
      d.omega = cfg.disturbance.omega;
      d.phase = cfg.disturbance.phase;
      d.center = cfg.disturbance.center;
      d.width = cfg.disturbance.width;
      d.rate = cfg.disturbance.rate;
      d.direction = cfg.disturbance.mode == 0
                        ? Vec<double>(Vec<double>::Ones(model.dim()) / std::sqrt(double(model.dim())))
                        : Vec<double>(Vec<double>::Unit(model.dim(), cfg.disturbance.mode - 1));
      DissipationOptions dopt;
      dopt.output_step = cfg.dissipation_output_step;
      const auto diss = check_dissipation(*oracle, model, gain, f, d, x0, cfg.dissipation_t_end, dopt);
      {
        CsvWriter csv(dir / "dissipation.csv", {"t", "V", "dini_quotient", "rhs_bound", "residual"});
        for (const auto& s : diss.samples) csv.row(std::vector<double>{s.t, s.V, s.dini, s.rhs_bound, s.residual});
      }
      declare("dissipation.csv");
      verify["dissipation"] = diss.pass ? "pass" : "fail";
      verify["dissipation_max_excess"] = diss.max_residual;
      verify["integral_comparison"] = diss.integral_pass ? "pass" : "fail";
      verify["integral_max_excess"] = diss.max_integral_excess;
      if (!diss.pass) verify["dissipation_witness_t"] = diss.witness_t;
    } else {
      verify["corollary"] = "skipped";
      verify["dissipation"] = "skipped";
    }
    summary["verify"] = verify;
  }
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kValidation;
  if (dynamic_cast<const CertificationError*>(&e)) return kCertification;
  if (dynamic_cast<const SimulationError*>(&e)) return kSimulation;
  return kFailure;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage last, const std::string& directory) {
  Pipeline p(cfg, fs::path(directory));
  PipelineResult result;
  Stage current = Stage::Eig;
  try {
    fs::create_directories(p.dir);
    p.stage_eig();
    if (last >= Stage::Design) {
      current = Stage::Design;
      p.stage_design();
    }
    if (last >= Stage::Certify) {
      current = Stage::Certify;
      p.stage_certify();
    }
    if (last >= Stage::Simulate) {
      current = Stage::Simulate;
      p.stage_simulate();
    }
    if (last >= Stage::Verify) {
      current = Stage::Verify;
      p.stage_verify();
    }
    p.summary["status"] = "ok";
  } catch (const std::exception& e) {
    result.exit_code = exit_code_for(e);
    p.summary["status"] = "error";
    p.summary["failed_stage"] = std::string(to_string(current));
    p.summary["error"] = e.what();
  }
  p.summary["stage"] = std::string(to_string(last));
  p.summary["seed"] = cfg.seed;
  p.summary["config"] = to_json(cfg);
  p.summary["warnings"] = p.warnings;
  p.declare("summary.json");
  p.summary["files"] = p.files;
  try {
    write_json(p.dir / "summary.json", p.summary);
  } catch (const std::exception& e) {
    if (result.exit_code == kSuccess) result.exit_code = kFailure;
    p.summary["error"] = e.what();
  }
  result.summary = std::move(p.summary);
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                const std::vector<double>& values, int jobs, const std::string& directory) {
  if (axis != "tau" && axis != "sigma" && axis != "delta" && axis != "J")
    throw ValidationError("sweep axis must be one of tau, sigma, delta, J");
  fs::create_directories(directory);
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      ExperimentConfig cell = cfg;
      const double v = values[i];
      rows[i].value = v;
      try {
        if (axis == "tau") cell.tau = v;
        if (axis == "sigma") cell.sigma = v;
        if (axis == "delta") cell.delta = v;
        if (axis == "J") cell.modes = static_cast<int>(std::lround(v));
        if (axis == "sigma" && !(v > 0 && v < 1)) throw ValidationError("sigma must lie in (0, 1)");
        if (axis == "delta" && !(v >= 0 && v <= 1)) throw ValidationError("delta must lie in [0, 1]");
        if (axis == "tau" && !(v > 0)) throw ValidationError("tau must be positive");
        if (axis == "J" && cell.modes < 1) throw ValidationError("J must be >= 1");
        if (axis == "J") cell.grid_points.reset();
        auto r = run_pipeline(cell, Stage::Verify, (fs::path(directory) / (axis + "_" + std::to_string(i))).string());
        rows[i].status = r.summary.value("status", "error") == "ok" ? "ok"
                                                                     : "failed:" + r.summary.value("failed_stage", "");
        rows[i].summary = std::move(r.summary);
      } catch (const std::exception& e) {
        rows[i].status = "failed:config";
        rows[i].summary = {{"error", e.what()}};
      }
    }
  };
  const int count = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto number = [](const json& j, std::initializer_list<const char*> path) {
    const json* node = &j;
    for (const char* key : path) {
      if (!node->is_object() || !node->contains(key)) return std::numeric_limits<double>::quiet_NaN();
      node = &(*node)[key];
    }
    return node->is_number() ? node->get<double>() : std::numeric_limits<double>::quiet_NaN();
  };
  auto text = [](const json& j, const char* section, const char* key) -> std::string {
    if (!j.contains(section) || !j[section].is_object() || !j[section].contains(key)) return "";
    const json& v = j[section][key];
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  CsvWriter csv(fs::path(directory) / "sweep.csv",
                {axis, "status", "tau", "q_hat", "chi", "vartheta", "event_count", "savings_percent", "corollary",
                 "dissipation", "sampled_envelope"});
  for (const auto& row : rows) {
    const json& s = row.summary;
    csv.row(std::vector<std::string>{format_number(row.value), row.status,
                                     format_number(number(s, {"certificate", "tau"})),
                                     format_number(number(s, {"certificate", "q"})),
                                     format_number(number(s, {"certificate", "chi"})),
                                     format_number(number(s, {"certificate", "vartheta"})),
                                     format_number(number(s, {"simulation", "count_et"})),
                                     format_number(number(s, {"simulation", "savings_percent"})),
                                     text(s, "verify", "corollary"), text(s, "verify", "dissipation"),
                                     text(s, "verify", "sampled_envelope")});
  }
  return rows;
}

}  // namespace etpde::app
