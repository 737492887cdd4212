#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "backreact/config.hpp"
#include "backreact/diagnostics.hpp"
#include "backreact/exact_reference.hpp"
#include "backreact/output.hpp"
#include "backreact/selftest.hpp"

#ifndef BACKREACT_DEFAULT_CONFIG
#define BACKREACT_DEFAULT_CONFIG "configs/default.cfg"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace backreact;

namespace {

constexpr int kConfigError = 2;
constexpr int kContaminated = 3;
constexpr int kControlFailed = 4;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

struct Run {
  RunConfig config;
  fs::path out;
  unsigned threads = 1;
  json summary;
};

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

json echo(const RunConfig& c) {
  json j = json::object();
  for (const auto& [key, value] : c.entries) j[key] = value;
  return j;
}

json estimate(const Estimate& e) { return {{"mean", e.mean}, {"standard_error", e.standard_error}}; }

json scores(const std::vector<NamedScore>& z) {
  json j = json::object();
  for (const auto& [name, value] : z) j[name] = value;
  return j;
}

Run prepare(const Options& o, const std::string& command) {
  Run run;
  run.config = load_config(o.config_path);
  if (o.seed) {
    run.config.seed = *o.seed;
    auto& entries = run.config.entries;
    const auto it = std::find_if(entries.begin(), entries.end(), [](const auto& kv) { return kv.first == "seed"; });
    if (it != entries.end()) {
      it->second = std::to_string(*o.seed);
    } else {
      entries.emplace_back("seed", std::to_string(*o.seed));
    }
  }
  run.out = o.out.empty() ? fs::path(run.config.output_dir) : fs::path(o.out);
  run.threads = resolve_threads(o.threads ? o.threads : run.config.threads);
  fs::create_directories(run.out);
  run.summary["command"] = command;
  run.summary["config_source"] = run.config.source;
  run.summary["config"] = echo(run.config);
  run.summary["seeds"] = {{"seed", run.config.seed}, {"resample_seed", run.config.resample_seed}};
  run.summary["threads"] = run.threads;
  return run;
}

int finish(Run& run, bool contaminated, std::optional<bool> control_passed) {
  run.summary["contaminated"] = contaminated;
  if (control_passed) run.summary["control_passed"] = *control_passed;
  int status = 0;
  if (contaminated) {
    status = kContaminated;
  } else if (control_passed && !*control_passed) {
    status = kControlFailed;
  }
  run.summary["exit_status"] = status;
  write_text(run.out / "summary.json", run.summary.dump(2) + "\n");
  std::cout << "wrote " << (run.out / "summary.json").string() << " (status " << status << ")\n";
  return status;
}

bool over_fraction(std::size_t flagged, std::size_t total, double fraction) {
  return static_cast<double>(flagged) > fraction * static_cast<double>(total);
}

std::vector<std::string> observable_header() {
  std::vector<std::string> h{"t"};
  for (const auto& [name, e] : EnsembleObservables{}.named()) {
    h.push_back(name);
    h.push_back(name + "_se");
  }
  for (const char* extra : {"quantum_kinetic", "quantum_potential", "coupling_expectation", "coupling_point",
                            "classical_kinetic", "classical_potential", "flagged"}) {
    h.emplace_back(extra);
  }
  return h;
}

std::vector<double> observable_row(const Ensemble& e) {
  const auto o = ensemble_observables(e);
  std::vector<double> row{e.time};
  for (const auto& [name, est] : o.named()) {
    row.push_back(est.mean);
    row.push_back(est.standard_error);
  }
  for (double v : {o.quantum_kinetic, o.quantum_potential, o.coupling_expectation, o.coupling_point,
                   o.classical_kinetic, o.classical_potential}) {
    row.push_back(v);
  }
  row.push_back(static_cast<double>(e.flagged_count()));
  return row;
}

int cmd_evolve(const Options& o) {
  auto run = prepare(o, "evolve");
  const auto& c = run.config;
  const auto spec = make_spec(c);
  const auto steps = required_steps(c, c.duration, "duration");
  const std::size_t every = std::max<std::size_t>(1, c.record_every);

  auto e = sample(spec);
  CsvWriter csv(run.out / "observables.csv", observable_header());
  csv.row(observable_row(e));
  for (std::size_t done = 0; done < steps;) {
    const std::size_t chunk = std::min(every, steps - done);
    done += chunk;
    e = evolve(e, spec.start_time + static_cast<double>(done) * spec.dt, run.threads);
    csv.row(observable_row(e));
  }
  write_snapshot(e, run.out / "final");

  const auto obs = ensemble_observables(e);
  json metrics = json::object();
  metrics["steps"] = steps;
  metrics["final_time"] = e.time;
  metrics["replicas"] = e.size();
  metrics["flagged"] = e.flagged_count();
  for (const auto& [name, est] : obs.named()) metrics["final"][name] = estimate(est);
  run.summary["metrics"] = metrics;
  return finish(run, over_fraction(e.flagged_count(), e.size(), c.contamination_fraction), std::nullopt);
}

int cmd_energy_audit(const Options& o) {
  auto run = prepare(o, "energy-audit");
  const auto& c = run.config;
  const auto spec = make_spec(c);
  AuditSettings settings;
  settings.steps = required_steps(c, c.duration, "duration");
  settings.record_every = std::max<std::size_t>(1, c.record_every);
  settings.threads = run.threads;
  settings.contamination_fraction = c.contamination_fraction;
  const auto audit = energy_audit(sample(spec), settings);

  const auto& k = audit.components;
  write_columns(run.out / "energy.csv",
                {"t", "energy_expectation", "energy_point", "quantum_kinetic", "quantum_potential",
                 "coupling_expectation", "coupling_point", "classical_kinetic", "classical_potential",
                 "classical_energy", "norm_deviation"},
                {&audit.times, &audit.energy_expectation, &audit.energy_point, &k.quantum_kinetic,
                 &k.quantum_potential, &k.coupling_expectation, &k.coupling_point, &k.classical_kinetic,
                 &k.classical_potential, &audit.classical_energy, &audit.norm_deviation});

  // The decoupled companion run is the control arm; its wavefunctions must
  // stay normalized like those of the main run.
  const bool control = audit.max_norm_deviation <= 1e-8;
  json m = {{"steps", settings.steps},
            {"drift_expectation", audit.drift_expectation},
            {"drift_point", audit.drift_point},
            {"classical_energy_drift", audit.classical_energy_drift},
            {"max_norm_deviation", audit.max_norm_deviation},
            {"component_sum_defect", audit.component_sum_defect},
            {"replicas", audit.replicas},
            {"flagged", audit.flagged}};
  if (audit.baseline_drift_expectation) {
    m["baseline_drift_expectation"] = *audit.baseline_drift_expectation;
    m["baseline_drift_point"] = *audit.baseline_drift_point;
    m["ratio_expectation"] = audit.drift_expectation / *audit.baseline_drift_expectation;
    m["ratio_point"] = audit.drift_point / *audit.baseline_drift_point;
  }
  run.summary["metrics"] = m;
  return finish(run, audit.contaminated, control);
}

struct EquivarianceSeries {
  std::vector<double> times, ks, threshold;
  std::size_t flagged = 0, replicas = 0;
};

EquivarianceSeries equivariance_series(const EnsembleSpec& spec, std::size_t steps, std::size_t every,
                                       unsigned threads) {
  EquivarianceSeries s;
  auto e = sample(spec);
  auto record = [&] {
    const auto r = equivariance_metric(e);
    s.times.push_back(e.time);
    s.ks.push_back(r.ks_distance);
    s.threshold.push_back(r.threshold);
  };
  record();
  for (std::size_t done = 0; done < steps;) {
    const std::size_t chunk = std::min(every, steps - done);
    done += chunk;
    e = evolve(e, spec.start_time + static_cast<double>(done) * spec.dt, threads);
    record();
  }
  s.flagged = e.flagged_count();
  s.replicas = e.size();
  return s;
}

int cmd_equivariance(const Options& o) {
  auto run = prepare(o, "equivariance");
  const auto& c = run.config;
  const auto spec = make_spec(c);
  const auto steps = required_steps(c, c.duration, "duration");
  const std::size_t every = std::max<std::size_t>(1, c.record_every);

  const auto coupled = equivariance_series(spec, steps, every, run.threads);
  const auto control = equivariance_series(with_coupling(spec, 0.0), steps, every, run.threads);
  std::vector<double> control_ks = control.ks;
  write_columns(run.out / "equivariance.csv", {"t", "ks", "ks_control", "threshold"},
                {&coupled.times, &coupled.ks, &control_ks, &coupled.threshold});

  const double threshold = coupled.threshold.back();
  const double control_limit = threshold + 0.01;
  const bool control_passed = control.ks.back() <= control_limit;
  run.summary["metrics"] = {{"steps", steps},
                            {"final_time", coupled.times.back()},
                            {"ks_final", coupled.ks.back()},
                            {"threshold", threshold},
                            {"exceeds_threshold", coupled.ks.back() > threshold},
                            {"control_ks_final", control.ks.back()},
                            {"control_limit", control_limit},
                            {"replicas", coupled.replicas},
                            {"flagged", coupled.flagged}};
  return finish(run, over_fraction(coupled.flagged, coupled.replicas, c.contamination_fraction), control_passed);
}

json arms_json(const ComposabilityArms& a) {
  json j = {{"z_scores", scores(a.z_scores)},
            {"max_abs_z", a.max_abs_z},
            {"resample_ks", a.resample_ks},
            {"resample_ks_threshold", a.resample_ks_threshold},
            {"equivariance_ks", a.equivariance_one_shot.ks_distance},
            {"flagged", a.flagged}};
  if (a.no_resample_identical) j["no_resample_identical"] = *a.no_resample_identical;
  for (const auto& [name, e] : a.one_shot.named()) j["one_shot"][name] = estimate(e);
  for (const auto& [name, e] : a.two_stage.named()) j["two_stage"][name] = estimate(e);
  return j;
}

int cmd_composability(const Options& o) {
  auto run = prepare(o, "composability");
  const auto& c = run.config;
  const auto spec = make_spec(c);
  const auto s1 = required_steps(c, c.t1, "t1");
  const auto s2 = required_steps(c, c.t2, "t2");
  if (s1 >= s2) throw ConfigError(c.where("t1") + ": t1 must be smaller than t2");
  if (s1 == 0) throw ConfigError(c.where("t1") + ": t1 must be later than the start time");

  ComposabilityOptions opt;
  opt.resample_seed = c.resample_seed;
  opt.threads = run.threads;
  opt.z_threshold = c.z_threshold;
  opt.control_z_threshold = c.control_z_threshold;
  const double t1 = spec.start_time + static_cast<double>(s1) * spec.dt;
  const double t2 = spec.start_time + static_cast<double>(s2) * spec.dt;
  const auto r = composability_test(spec, t1, t2, opt);

  CsvWriter csv(run.out / "z_scores.csv", {"observable", "z_coupled", "z_control"});
  for (std::size_t i = 0; i < r.coupled.z_scores.size(); ++i) {
    csv.row(std::vector<std::string>{r.coupled.z_scores[i].first, format_double(r.coupled.z_scores[i].second),
                                     format_double(r.control.z_scores.at(i).second)});
  }
  run.summary["metrics"] = {{"t0", r.t0},
                            {"t1", r.t1},
                            {"t2", r.t2},
                            {"replicas", r.replicas},
                            {"z_threshold", c.z_threshold},
                            {"control_z_threshold", c.control_z_threshold},
                            {"demonstrated", r.demonstrated},
                            {"coupled", arms_json(r.coupled)},
                            {"control", arms_json(r.control)}};
  return finish(run, over_fraction(r.coupled.flagged, r.replicas, c.contamination_fraction), r.control_passed);
}

json rho_arms_json(const RhoArmsResult& a) {
  return {{"initial_distance", a.initial_distance},
          {"final_distance", a.final_distance},
          {"z_scores", scores(a.z_scores)},
          {"max_abs_z", a.max_abs_z},
          {"flagged", a.flagged}};
}

int cmd_rho_test(const Options& o) {
  auto run = prepare(o, "rho-test");
  const auto& c = run.config;
  if (c.alt_components.empty()) {
    throw ConfigError(c.where("alt_component.1.weight") + ": rho-test needs a second mixture");
  }
  const auto spec = make_spec(c);
  const auto second = make_mixture(c, spec.model, true);
  const auto steps = required_steps(c, c.duration, "duration");
  RhoOptions opt;
  opt.threads = run.threads;
  opt.z_threshold = c.z_threshold;
  const auto r = rho_equivalence_test(spec, second, spec.start_time + static_cast<double>(steps) * spec.dt, opt);

  CsvWriter csv(run.out / "rho.csv", {"arm", "initial_distance", "final_distance", "max_abs_z"});
  csv.row(std::vector<std::string>{"coupled", format_double(r.coupled.initial_distance),
                                   format_double(r.coupled.final_distance), format_double(r.coupled.max_abs_z)});
  if (r.control) {
    csv.row(std::vector<std::string>{"control", format_double(r.control->initial_distance),
                                     format_double(r.control->final_distance), format_double(r.control->max_abs_z)});
  }
  json m = {{"final_time", r.final_time},
            {"replicas", r.replicas},
            {"tolerance", r.tolerance},
            {"demonstrated", r.demonstrated},
            {"coupled", rho_arms_json(r.coupled)}};
  if (r.control) m["control"] = rho_arms_json(*r.control);
  run.summary["metrics"] = m;
  return finish(run, over_fraction(r.coupled.flagged, 2 * r.replicas, c.contamination_fraction),
                r.control ? std::optional<bool>(r.control_passed) : std::nullopt);
}

int cmd_exact_compare(const Options& o) {
  auto run = prepare(o, "exact-compare");
  const auto& c = run.config;
  if (!c.heavy_grid) throw ConfigError(c.where("heavy_grid_points") + ": exact-compare needs a heavy grid");
  const auto spec = make_spec(c);
  ExactCompareSettings settings{build_grid(c.heavy_grid->x_min, c.heavy_grid->x_max, c.heavy_grid->points),
                                required_steps(c, c.duration, "duration"),
                                std::max<std::size_t>(1, c.record_every), c.exact_tolerance, run.threads};
  const auto r = compare_hybrid_exact(spec, settings);

  std::vector<std::string> header{"t"};
  std::vector<const std::vector<double>*> columns{&r.times};
  for (const auto& s : r.observables) {
    for (const auto& [suffix, col] : {std::pair{"_hybrid", &s.hybrid}, std::pair{"_hybrid_se", &s.hybrid_error},
                                      std::pair{"_exact", &s.exact}, std::pair{"_relative_error", &s.relative_error}}) {
      header.push_back(s.name + suffix);
      columns.push_back(col);
    }
  }

  // Control: the exact solution against the normal-mode closed form when the
  // model is quadratic, plus its own norm and boundary checks.
  std::optional<double> normal_mode_deviation;
  std::vector<double> nm_x, nm_big_x;
  const auto& component = spec.mixture.components().front();
  const auto q0 = quantum_expectations(component.psi, 0.0, spec.model);
  const auto& point = std::get<ClassicalPoint>(component.classical);
  try {
    double worst = 0.0;
    const auto& x = r.series("x").exact;
    const auto& big_x = r.series("X").exact;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      const auto nm = normal_mode_solution(spec.model, {q0.position, q0.momentum, point.position, point.momentum},
                                           r.times[i] - spec.start_time);
      nm_x.push_back(nm.x);
      nm_big_x.push_back(nm.big_x);
      worst = std::max({worst, std::abs(nm.x - x[i]), std::abs(nm.big_x - big_x[i])});
    }
    normal_mode_deviation = worst;
    header.insert(header.end(), {"x_normal_mode", "X_normal_mode"});
    columns.insert(columns.end(), {&nm_x, &nm_big_x});
  } catch (const InvalidArgument&) {
  }
  write_columns(run.out / "exact_compare.csv", header, columns);

  json m = {{"tolerance", r.tolerance},
            {"heavy_width", r.heavy_width},
            {"exact_max_norm_deviation", r.exact_max_norm_deviation},
            {"exact_boundary", r.exact_boundary},
            {"flagged", r.flagged}};
  for (const auto& s : r.observables) {
    m["max_relative_error"][s.name] = *std::max_element(s.relative_error.begin(), s.relative_error.end());
    m["horizon"][s.name] = s.horizon ? json(*s.horizon) : json(nullptr);
  }
  bool control = r.exact_max_norm_deviation <= 1e-8 && !r.exact_boundary;
  if (normal_mode_deviation) {
    m["normal_mode_deviation"] = *normal_mode_deviation;
    control = control && *normal_mode_deviation <= 1e-3;
  }
  run.summary["metrics"] = m;
  return finish(run, over_fraction(r.flagged, c.replicas, c.contamination_fraction), control);
}

int cmd_selftest(const Options& o) {
  std::optional<RunConfig> config;
  Run run;
  std::string path = o.config_path;
  if (path.empty() && fs::exists(BACKREACT_DEFAULT_CONFIG)) path = BACKREACT_DEFAULT_CONFIG;
  if (!path.empty()) {
    Options with_path = o;
    with_path.config_path = path;
    run = prepare(with_path, "selftest");
    config = run.config;
  } else {
    run.out = o.out.empty() ? fs::path("out") : fs::path(o.out);
    run.threads = resolve_threads(o.threads);
    fs::create_directories(run.out);
    run.summary["command"] = "selftest";
    run.summary["config"] = json::object();
  }

  const auto start = std::chrono::steady_clock::now();
  const auto checks = run_selftest(config, run.threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  CsvWriter csv(run.out / "selftest.csv", {"check", "passed", "seconds", "detail"});
  bool all = true;
  json list = json::array();
  for (const auto& ch : checks) {
    all = all && ch.passed;
    std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
    std::string detail = ch.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    csv.row(std::vector<std::string>{ch.name, ch.passed ? "1" : "0", format_double(ch.seconds), detail});
    list.push_back({{"name", ch.name}, {"passed", ch.passed}, {"seconds", ch.seconds}, {"detail", ch.detail}});
  }
  run.summary["metrics"] = {{"checks", list}, {"wall_clock_seconds", wall}, {"wall_clock_limit_seconds", 300}};
  return finish(run, false, all && wall <= 300.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical ensemble simulator"};
  app.require_subcommand(1);
  Options options;

  auto add = [&](const std::string& name, const std::string& help, bool config_required) {
    auto* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("--config", options.config_path, "configuration file");
    if (config_required) cfg->required();
    sub->add_option("--seed", options.seed, "master seed (overrides the configuration)");
    sub->add_option("--out", options.out, "output directory (default: output_dir from the configuration)");
    sub->add_option("--threads", options.threads, "worker threads, 0 = all cores");
    return sub;
  };
  auto* evolve_cmd = add("evolve", "hybrid run with an observable time series", true);
  auto* audit_cmd = add("energy-audit", "energy bookkeeping against the decoupled baseline", true);
  auto* equiv_cmd = add("equivariance", "KS distance of Bohmian positions from |psi|^2", true);
  auto* comp_cmd = add("composability", "one-shot vs re-sampled two-stage evolution", true);
  auto* rho_cmd = add("rho-test", "two mixtures with the same initial density matrix", true);
  auto* exact_cmd = add("exact-compare", "hybrid vs fully quantum 2D reference", true);
  auto* self_cmd = add("selftest", "quick module checks plus the reference scenario", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    if (evolve_cmd->parsed()) return cmd_evolve(options);
    if (audit_cmd->parsed()) return cmd_energy_audit(options);
    if (equiv_cmd->parsed()) return cmd_equivariance(options);
    if (comp_cmd->parsed()) return cmd_composability(options);
    if (rho_cmd->parsed()) return cmd_rho_test(options);
    if (exact_cmd->parsed()) return cmd_exact_compare(options);
    if (self_cmd->parsed()) return cmd_selftest(options);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
