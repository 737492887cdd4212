#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "backreact/diagnostics.hpp"
#include "backreact/errors.hpp"

namespace backreact {

// Rejected configuration; the message names the source, line and field.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A time-valued key: plain number (time units), "<n> steps", or
// "<n> periods" (classical periods 2 pi / omega_c).
struct TimeValue {
  enum class Unit { time, steps, periods };
  double value = 0.0;
  Unit unit = Unit::time;
};

struct PsiSpec {
  enum class Kind { gaussian, eigen, superposition };
  Kind kind = Kind::gaussian;
  std::vector<double> parameters;  // gaussian: center width wavenumber; eigen: n; superposition: c_0..c_k
};

struct ComponentSpec {
  double weight = 0.0;
  ClassicalDistribution classical = ClassicalPoint{0.0, 0.0};
  PsiSpec psi;
};

struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t points = 0;
};

struct RunConfig {
  std::string source;
  std::string scenario;

  double quantum_mass = 1.0;
  double classical_mass = 0.0;
  double hbar = 1.0;
  std::string quantum_potential;  // "harmonic" or "double_well"
  double omega_q = 0.0;
  double barrier_height = 0.0;
  double minima_separation = 0.0;
  double omega_c = 0.0;
  double coupling = 0.0;

  GridSpec grid;
  std::optional<GridSpec> heavy_grid;
  double dt = 0.0;
  std::optional<TimeValue> duration;
  std::optional<TimeValue> t1;
  std::optional<TimeValue> t2;
  std::size_t record_every = 1;

  std::size_t replicas = 0;
  std::uint64_t seed = 1;
  std::uint64_t resample_seed = 2;
  GuidanceSettings guidance;
  double z_threshold = 5.0;
  double control_z_threshold = 3.0;
  double exact_tolerance = 0.05;
  double contamination_fraction = 0.01;

  unsigned threads = 0;
  std::string output_dir = "out";

  std::vector<ComponentSpec> components;
  std::vector<ComponentSpec> alt_components;

  // Every key as written, in file order, for the run summary.
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int> lines;

  bool has(const std::string& key) const { return lines.count(key) != 0; }
  // "<source>:<line>: field '<key>'" or "<source>: field '<key>'" if absent.
  std::string where(const std::string& key) const;
};

RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

HybridModel make_model(const RunConfig& config);
SpatialGrid make_grid(const RunConfig& config);
// Throws ConfigError naming `alt_component` or `component` on invalid specs.
InitialMixture make_mixture(const RunConfig& config, const HybridModel& model, bool alternate = false);
EnsembleSpec make_spec(const RunConfig& config);

// Whole number of steps for a time value; throws ConfigError for values that
// are not commensurate with dt. `key` is used in the message.
std::size_t steps_for(const RunConfig& config, const TimeValue& value, const std::string& key);
// Steps for a required time key; throws ConfigError naming it if missing.
std::size_t required_steps(const RunConfig& config, const std::optional<TimeValue>& value,
                           const std::string& key);

// The configuration as key = value text (round-trips through parse_config).
std::string format_config(const RunConfig& config);

}  // namespace backreact
