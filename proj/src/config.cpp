#include "backreact/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <regex>
#include <sstream>

namespace backreact {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

class Parser {
 public:
  explicit Parser(RunConfig& c) : c_(c) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(c_.where(key) + ": " + why);
  }

  double number(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      fail(key, "expected a finite number, got '" + text + "'");
    }
    return v;
  }

  std::uint64_t integer(const std::string& key, const std::string& text) const {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(key, "expected a non-negative integer, got '" + text + "'");
    return v;
  }

  double positive(const std::string& key, const std::string& text) const {
    const double v = number(key, text);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  TimeValue time(const std::string& key, const std::string& text) const {
    const auto w = words(text);
    if (w.empty() || w.size() > 2) fail(key, "expected '<number> [steps|periods]'");
    TimeValue t;
    t.value = number(key, w[0]);
    if (w.size() == 2) {
      if (w[1] == "steps") {
        t.unit = TimeValue::Unit::steps;
      } else if (w[1] == "periods") {
        t.unit = TimeValue::Unit::periods;
      } else {
        fail(key, "unknown time unit '" + w[1] + "' (use steps or periods)");
      }
    }
    if (!(t.value >= 0.0)) fail(key, "must not be negative");
    return t;
  }

  ClassicalDistribution classical(const std::string& key, const std::string& text) const {
    const auto w = words(text);
    if (!w.empty() && w[0] == "point" && w.size() == 3) {
      return ClassicalPoint{number(key, w[1]), number(key, w[2])};
    }
    if (!w.empty() && w[0] == "gaussian" && w.size() == 5) {
      ClassicalGaussian g{number(key, w[1]), number(key, w[2]), number(key, w[3]), number(key, w[4])};
      if (!(g.sd_position >= 0.0) || !(g.sd_momentum >= 0.0)) {
        fail(key, "standard deviations must not be negative");
      }
      return g;
    }
    fail(key, "expected 'point <X> <K>' or 'gaussian <X> <K> <sd_X> <sd_K>'");
  }

  PsiSpec psi(const std::string& key, const std::string& text) const {
    const auto w = words(text);
    PsiSpec p;
    if (w.empty()) fail(key, "empty wavefunction spec");
    for (std::size_t i = 1; i < w.size(); ++i) p.parameters.push_back(number(key, w[i]));
    if (w[0] == "gaussian" && p.parameters.size() == 3) {
      p.kind = PsiSpec::Kind::gaussian;
    } else if (w[0] == "eigen" && p.parameters.size() == 1) {
      p.kind = PsiSpec::Kind::eigen;
    } else if (w[0] == "superposition" && !p.parameters.empty()) {
      p.kind = PsiSpec::Kind::superposition;
    } else {
      fail(key,
           "expected 'gaussian <center> <width> <wavenumber>', 'eigen <n>' or "
           "'superposition <c0> <c1> ...'");
    }
    return p;
  }

 private:
  RunConfig& c_;
};

struct PartialComponent {
  std::optional<double> weight;
  std::optional<ClassicalDistribution> classical;
  std::optional<PsiSpec> psi;
};

std::vector<ComponentSpec> assemble(const RunConfig& c, const std::string& prefix,
                                    std::map<std::size_t, PartialComponent>& parts) {
  std::vector<ComponentSpec> out;
  std::size_t expected = 1;
  for (auto& [index, p] : parts) {
    const std::string base = prefix + "." + std::to_string(index);
    if (index != expected) {
      throw ConfigError(c.where(prefix + "." + std::to_string(expected) + ".weight") +
                        ": components must be numbered 1, 2, ... without gaps");
    }
    ++expected;
    for (const char* field : {"weight", "classical", "psi"}) {
      const bool present = (std::string(field) == "weight" && p.weight) ||
                           (std::string(field) == "classical" && p.classical) ||
                           (std::string(field) == "psi" && p.psi);
      if (!present) throw ConfigError(c.where(base + "." + field) + ": missing required field");
    }
    out.push_back({*p.weight, *p.classical, *p.psi});
  }
  return out;
}

}  // namespace

std::string RunConfig::where(const std::string& key) const {
  const auto it = lines.find(key);
  if (it == lines.end()) return source + ": field '" + key + "'";
  return source + ":" + std::to_string(it->second) + ": field '" + key + "'";
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig c;
  c.source = source;
  std::map<std::string, std::string> raw;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (c.lines.count(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": field '" + key +
                        "': duplicate (first set on line " + std::to_string(c.lines[key]) + ")");
    }
    c.lines[key] = line_no;
    if (value.empty()) throw ConfigError(c.where(key) + ": empty value");
    raw[key] = value;
    c.entries.emplace_back(key, value);
  }

  Parser p(c);
  std::optional<double> grid_min, grid_max, heavy_min, heavy_max;
  std::optional<std::size_t> grid_points, heavy_points;
  std::map<std::size_t, PartialComponent> parts, alt_parts;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> scalar = {
      {"scenario", [&](auto&, auto& v) { c.scenario = v; }},
      {"quantum_mass", [&](auto& k, auto& v) { c.quantum_mass = p.positive(k, v); }},
      {"classical_mass", [&](auto& k, auto& v) { c.classical_mass = p.positive(k, v); }},
      {"hbar", [&](auto& k, auto& v) { c.hbar = p.positive(k, v); }},
      {"quantum_potential",
       [&](auto& k, auto& v) {
         if (v != "harmonic" && v != "double_well") p.fail(k, "expected harmonic or double_well");
         c.quantum_potential = v;
       }},
      {"omega_q", [&](auto& k, auto& v) { c.omega_q = p.positive(k, v); }},
      {"barrier_height", [&](auto& k, auto& v) { c.barrier_height = p.positive(k, v); }},
      {"minima_separation", [&](auto& k, auto& v) { c.minima_separation = p.positive(k, v); }},
      {"omega_c", [&](auto& k, auto& v) { c.omega_c = p.positive(k, v); }},
      {"coupling", [&](auto& k, auto& v) { c.coupling = p.number(k, v); }},
      {"grid_min", [&](auto& k, auto& v) { grid_min = p.number(k, v); }},
      {"grid_max", [&](auto& k, auto& v) { grid_max = p.number(k, v); }},
      {"grid_points", [&](auto& k, auto& v) { grid_points = p.integer(k, v); }},
      {"heavy_grid_min", [&](auto& k, auto& v) { heavy_min = p.number(k, v); }},
      {"heavy_grid_max", [&](auto& k, auto& v) { heavy_max = p.number(k, v); }},
      {"heavy_grid_points", [&](auto& k, auto& v) { heavy_points = p.integer(k, v); }},
      {"dt", [&](auto& k, auto& v) { c.dt = p.positive(k, v); }},
      {"duration", [&](auto& k, auto& v) { c.duration = p.time(k, v); }},
      {"t1", [&](auto& k, auto& v) { c.t1 = p.time(k, v); }},
      {"t2", [&](auto& k, auto& v) { c.t2 = p.time(k, v); }},
      {"record_every",
       [&](auto& k, auto& v) {
         c.record_every = p.integer(k, v);
         if (c.record_every == 0) p.fail(k, "must be at least 1");
       }},
      {"replicas",
       [&](auto& k, auto& v) {
         c.replicas = p.integer(k, v);
         if (c.replicas < 2) p.fail(k, "need at least 2 replicas");
       }},
      {"seed", [&](auto& k, auto& v) { c.seed = p.integer(k, v); }},
      {"resample_seed", [&](auto& k, auto& v) { c.resample_seed = p.integer(k, v); }},
      {"node_threshold",
       [&](auto& k, auto& v) {
         c.guidance.node_threshold = p.positive(k, v);
         if (c.guidance.node_threshold >= 1.0) p.fail(k, "must be below 1");
       }},
      {"interpolation_order",
       [&](auto& k, auto& v) {
         const auto order = p.integer(k, v);
         if (order != 1 && order != 3) p.fail(k, "must be 1 or 3");
         c.guidance.interpolation_order = static_cast<int>(order);
       }},
      {"z_threshold", [&](auto& k, auto& v) { c.z_threshold = p.positive(k, v); }},
      {"control_z_threshold", [&](auto& k, auto& v) { c.control_z_threshold = p.positive(k, v); }},
      {"exact_tolerance", [&](auto& k, auto& v) { c.exact_tolerance = p.positive(k, v); }},
      {"contamination_fraction",
       [&](auto& k, auto& v) {
         c.contamination_fraction = p.number(k, v);
         if (!(c.contamination_fraction >= 0.0 && c.contamination_fraction < 1.0)) {
           p.fail(k, "must lie in [0, 1)");
         }
       }},
      {"threads", [&](auto& k, auto& v) { c.threads = static_cast<unsigned>(p.integer(k, v)); }},
      {"output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
  };

  static const std::regex component_key(R"((alt_component|component)\.([0-9]+)\.(weight|classical|psi))");
  for (const auto& [key, value] : raw) {
    if (const auto it = scalar.find(key); it != scalar.end()) {
      it->second(key, value);
      continue;
    }
    std::smatch m;
    if (std::regex_match(key, m, component_key)) {
      const std::size_t index = std::stoul(m[2].str());
      if (index == 0) p.fail(key, "component numbering starts at 1");
      auto& part = (m[1] == "alt_component" ? alt_parts : parts)[index];
      if (m[3] == "weight") {
        part.weight = p.number(key, value);
        if (!(*part.weight > 0.0 && *part.weight <= 1.0)) p.fail(key, "weight must lie in (0, 1]");
      } else if (m[3] == "classical") {
        part.classical = p.classical(key, value);
      } else {
        part.psi = p.psi(key, value);
      }
      continue;
    }
    p.fail(key, "unknown field");
  }

  for (const char* key : {"classical_mass", "quantum_potential", "omega_c", "coupling", "grid_min",
                          "grid_max", "grid_points", "dt", "replicas"}) {
    if (!c.has(key)) throw ConfigError(c.where(key) + ": missing required field");
  }
  if (c.quantum_potential == "harmonic" && !c.has("omega_q")) {
    throw ConfigError(c.where("omega_q") + ": missing required field for a harmonic quantum potential");
  }
  if (c.quantum_potential == "double_well") {
    for (const char* key : {"barrier_height", "minima_separation"}) {
      if (!c.has(key)) {
        throw ConfigError(c.where(key) + ": missing required field for a double-well quantum potential");
      }
    }
  }
  c.grid = {*grid_min, *grid_max, *grid_points};
  if (heavy_min || heavy_max || heavy_points) {
    for (const char* key : {"heavy_grid_min", "heavy_grid_max", "heavy_grid_points"}) {
      if (!c.has(key)) throw ConfigError(c.where(key) + ": missing (heavy grid keys come as a set)");
    }
    c.heavy_grid = GridSpec{*heavy_min, *heavy_max, *heavy_points};
  }
  if (parts.empty()) throw ConfigError(c.where("component.1.weight") + ": missing required field");
  c.components = assemble(c, "component", parts);
  c.alt_components = assemble(c, "alt_component", alt_parts);

  // Build once so model, grid and mixture errors surface at load time.
  const auto model = make_model(c);
  make_grid(c);
  make_mixture(c, model);
  if (!c.alt_components.empty()) make_mixture(c, model, true);
  for (const auto& [key, value] : {std::pair{"duration", &c.duration}, std::pair{"t1", &c.t1},
                                   std::pair{"t2", &c.t2}}) {
    if (*value) steps_for(c, **value, key);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

HybridModel make_model(const RunConfig& c) {
  QuantumPotential v_q = HarmonicWell{c.omega_q};
  if (c.quantum_potential == "double_well") v_q = DoubleWell{c.barrier_height, c.minima_separation};
  try {
    return HybridModel(c.quantum_mass, c.classical_mass, c.hbar, v_q, ClassicalHarmonic{c.omega_c},
                       BilinearCoupling{c.coupling});
  } catch (const std::exception& e) {
    throw ConfigError(c.where("quantum_potential") + ": " + e.what());
  }
}

SpatialGrid make_grid(const RunConfig& c) {
  try {
    return build_grid(c.grid.x_min, c.grid.x_max, c.grid.points);
  } catch (const std::exception& e) {
    throw ConfigError(c.where("grid_points") + ": " + e.what());
  }
}

InitialMixture make_mixture(const RunConfig& c, const HybridModel& model, bool alternate) {
  const auto& specs = alternate ? c.alt_components : c.components;
  const std::string prefix = alternate ? "alt_component" : "component";
  if (specs.empty()) throw ConfigError(c.where(prefix + ".1.weight") + ": missing required field");
  const auto grid = make_grid(c);
  std::vector<MixtureComponent> components;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const std::string key = prefix + "." + std::to_string(i + 1) + ".psi";
    try {
      const auto& a = s.psi.parameters;
      switch (s.psi.kind) {
        case PsiSpec::Kind::gaussian:
          components.push_back({s.weight, s.classical, init_gaussian(grid, a[0], a[1], a[2])});
          break;
        case PsiSpec::Kind::eigen:
          if (a[0] != std::floor(a[0])) throw InvalidArgument("eigenstate index must be an integer");
          components.push_back(
              {s.weight, s.classical, init_eigenstate(grid, model, static_cast<int>(a[0]))});
          break;
        case PsiSpec::Kind::superposition:
          components.push_back({s.weight, s.classical, init_eigen_superposition(grid, model, a)});
          break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(c.where(key) + ": " + e.what());
    }
  }
  try {
    return InitialMixture(std::move(components));
  } catch (const std::exception& e) {
    throw ConfigError(c.where(prefix + ".1.weight") + ": " + e.what());
  }
}

EnsembleSpec make_spec(const RunConfig& c) {
  const auto model = make_model(c);
  return EnsembleSpec{make_mixture(c, model), model, c.dt, c.replicas, c.seed, c.guidance, 0.0};
}

std::size_t steps_for(const RunConfig& c, const TimeValue& value, const std::string& key) {
  double steps = 0.0;
  switch (value.unit) {
    case TimeValue::Unit::steps:
      steps = value.value;
      if (steps != std::floor(steps)) throw ConfigError(c.where(key) + ": step count must be whole");
      return static_cast<std::size_t>(steps);
    case TimeValue::Unit::periods:
      // Nearest whole number of steps to the requested number of periods.
      return static_cast<std::size_t>(
          std::llround(value.value * 2.0 * std::numbers::pi / c.omega_c / c.dt));
    case TimeValue::Unit::time:
      steps = std::round(value.value / c.dt);
      if (std::abs(value.value - steps * c.dt) > 1e-9 * std::max(1.0, std::abs(value.value))) {
        throw ConfigError(c.where(key) + ": " + std::to_string(value.value) +
                          " is not a whole number of steps of dt = " + std::to_string(c.dt));
      }
      return static_cast<std::size_t>(steps);
  }
  return 0;
}

std::size_t required_steps(const RunConfig& c, const std::optional<TimeValue>& value,
                           const std::string& key) {
  if (!value) throw ConfigError(c.where(key) + ": missing required field");
  return steps_for(c, *value, key);
}

std::string format_config(const RunConfig& c) {
  std::string out;
  for (const auto& [key, value] : c.entries) out += key + " = " + value + "\n";
  return out;
}

}  // namespace backreact
