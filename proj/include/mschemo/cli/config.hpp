#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mschemo/dynamics.hpp"
#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo::cli {

inline constexpr int kSchemaVersion = 1;

struct GeometrySpec {
  GeometryKind kind = GeometryKind::rectangle;
  double lx = 1.0;
  double ly = 1.0;
  double radius = 1.0;
  Point center;
  int n = 64;

  [[nodiscard]] Grid build() const;
};

/// Initial density of one species.
struct DensitySpec {
  enum class Preset { uniform, gaussian_bump, field_file };
  Preset preset = Preset::gaussian_bump;
  double mass = 0.0;  // 0: take the dynamics lambda
  std::optional<Point> center;
  double width = 0.1;
  std::filesystem::path path;
};

struct PotentialSpec {
  enum class Preset { zero, field_file, bubble_potential };
  Preset preset = Preset::zero;
  std::filesystem::path path;
  double epsilon = 0.1;  // bubble_potential: v = G * psi_eps of the given mass
  double mass = 0.0;
};

struct CheckSpec {
  int trials = 100;
  double lambda = 4.0 * kPi;
  MassConstraint variant = MassConstraint::average;
  double amplitude = 1.0;       // peak size of the random smooth fields
  double fd_step = 1e-4;
  double duality_tolerance = 1e-10;
  double gradient_tolerance = 1e-5;
};

struct BubbleSpec {
  std::vector<double> epsilons;
  std::vector<double> lambdas{kCriticalMass};
  double eta = 0.5;
};

/// Fully parsed and validated run configuration.
struct RunConfig {
  int schema_version = kSchemaVersion;
  GeometrySpec geometry;
  std::vector<Atom> atoms{{1.0, 1.0}};
  SimConfig sim;
  std::vector<DensitySpec> initial_rho{DensitySpec{}};
  PotentialSpec initial_v;
  CheckSpec checks;
  BubbleSpec bubbles;
  std::filesystem::path output_dir = "output";
  std::uint64_t seed = 1;
  int threads = 1;
  /// Effective configuration (file plus overrides) re-emitted as YAML.
  std::string echo;

  [[nodiscard]] SpeciesMeasure measure() const { return make_measure(atoms); }
  /// DensitySpec for species j (a single entry applies to every species).
  [[nodiscard]] const DensitySpec& density_spec(std::size_t j) const;
};

/// Parses "8pi", "-0.5pi", "pi", "1e-3" and plain numbers.
double parse_number(const std::string& text);

/// Loads YAML text (file name only used in messages), applies `--set key=value`
/// overrides with dotted keys, then parses and validates. Errors are
/// ConfigError with "file:line:col: message" or "override key: message".
RunConfig parse_config(const std::string& yaml_text, const std::string& source_name,
                       const std::vector<std::string>& overrides = {});

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

/// Measure literal as YAML flow, e.g. "[{alpha: 1, weight: 0.5}, {alpha: 0.5, weight: 0.5}]".
std::vector<Atom> parse_measure_literal(const std::string& text);

const char* to_string(DensitySpec::Preset p);
const char* to_string(PotentialSpec::Preset p);

}  // namespace mschemo::cli
