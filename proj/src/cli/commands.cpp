#include "mschemo/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <json.hpp>

#include "mschemo/bubbles.hpp"
#include "mschemo/field_io.hpp"
#include "mschemo/functionals.hpp"
#include "mschemo/greens.hpp"
#include "mschemo/random_fields.hpp"

namespace mschemo::cli {

namespace {

using json = nlohmann::json;

constexpr std::size_t kCsvSnapshotCells = 4096;

std::ostream& out_of(const CommandOptions& o) { return o.out ? *o.out : std::cout; }
std::ostream& err_of(const CommandOptions& o) { return o.err ? *o.err : std::cerr; }

template <typename F>
int guarded(const CommandOptions& options, F body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err_of(options) << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MeasureError& e) {
    err_of(options) << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GridError& e) {
    err_of(options) << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FieldIoError& e) {
    err_of(options) << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BubbleError& e) {
    err_of(options) << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err_of(options) << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

ScalarField initial_density(const DensitySpec& spec, double fallback_mass, const Grid& grid) {
  const double mass = spec.mass > 0.0 ? spec.mass : fallback_mass;
  if (spec.preset != DensitySpec::Preset::field_file && !(mass > 0.0))
    throw ConfigError("initial.rho: set mass or dynamics.lambda");
  switch (spec.preset) {
    case DensitySpec::Preset::uniform:
      return grid.constant(mass / grid.area());
    case DensitySpec::Preset::gaussian_bump:
      return gaussian_bump(grid, spec.center.value_or(grid.center()), spec.width, mass);
    case DensitySpec::Preset::field_file: {
      ScalarField rho = read_field_binary(spec.path, grid);
      if (rho.size() && rho.minCoeff() < 0.0)
        throw ConfigError(spec.path.string() + ": initial density has negative entries");
      return rho;
    }
  }
  return grid.zeros();
}

ScalarField initial_potential(const PotentialSpec& spec, const Grid& grid, const GreenOperator& green) {
  switch (spec.preset) {
    case PotentialSpec::Preset::zero:
      return grid.zeros();
    case PotentialSpec::Preset::field_file:
      return read_field_binary(spec.path, grid);
    case PotentialSpec::Preset::bubble_potential:
      return solve_poisson(bubble_density(grid, spec.epsilon, spec.mass), green);
  }
  return grid.zeros();
}

json measure_json(const SpeciesMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"alpha", a.alpha}, {"weight", a.weight}});
  return atoms;
}

void write_snapshot(const std::filesystem::path& dir, std::size_t index, const Snapshot& snap,
                    const Grid& grid) {
  std::ostringstream stem;
  stem << "snapshot_" << std::setw(3) << std::setfill('0') << index;
  auto emit = [&](const std::string& name, const ScalarField& u) {
    write_field_binary(dir / (stem.str() + "_" + name + ".bin"), u, grid);
    if (grid.size() <= kCsvSnapshotCells) write_field_csv(dir / (stem.str() + "_" + name + ".csv"), u, grid);
  };
  emit("v", snap.state.v);
  for (std::size_t j = 0; j < snap.state.rho.atoms(); ++j) emit("rho" + std::to_string(j), snap.state.rho[j]);
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig cfg = options.config_path.empty()
                      ? parse_config("schema_version: 1\n", "<defaults>", options.overrides)
                      : load_config(options.config_path, options.overrides);
  if (options.seed) cfg.seed = *options.seed;
  if (options.threads) {
    if (*options.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg.threads = *options.threads;
  }
  return cfg;
}

std::filesystem::path output_directory(const RunConfig& config) {
  if (config.output_dir.is_absolute()) return config.output_dir;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return std::filesystem::path(root) / config.output_dir;
  return config.output_dir;
}

int cmd_simulate(const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig cfg = resolve_config(options);
    const Grid grid = cfg.geometry.build();
    const SpeciesMeasure measure = cfg.measure();
    const GreenOperator green(grid);
    const SimConfig& sim = cfg.sim;

    SimState initial;
    initial.v = initial_potential(cfg.initial_v, grid, green);
    if (sim.regime == Regime::full || sim.regime == Regime::smoluchowski) {
      for (std::size_t j = 0; j < measure.size(); ++j)
        initial.rho.species.push_back(initial_density(cfg.density_spec(j), sim.lambda, grid));
    }

    const auto dir = output_directory(cfg);
    std::filesystem::create_directories(dir);
    std::ofstream csv = open_output(dir / "trajectory.csv");
    write_trajectory_header(csv, measure.size());
    const auto start = std::chrono::steady_clock::now();

    json meta;
    meta["config"] = cfg.echo;
    meta["regime"] = to_string(sim.regime);
    meta["grid"] = {{"cells", grid.size()}, {"h", grid.h()}, {"nx", grid.nx()}, {"ny", grid.ny()}};
    meta["measure"] = measure_json(measure);
    int code = kExitOk;
    try {
      const Trajectory traj =
          run(initial, sim, measure, grid, green, [&](const Diagnostics& d) { write_trajectory_row(csv, d); });
      for (std::size_t i = 0; i < traj.snapshots.size(); ++i) write_snapshot(dir, i, traj.snapshots[i], grid);
      meta["termination"] = to_string(traj.termination);
      meta["message"] = traj.message;
      meta["steps"] = traj.steps;
      meta["final_time"] = traj.final_state.time;
      meta["records"] = traj.records.size();
      meta["snapshots"] = traj.snapshots.size();
      if (traj.termination == Termination::collapse) code = kExitCollapse;
    } catch (const StepError& e) {
      meta["termination"] = "error";
      meta["message"] = e.what();
      err_of(options) << "error: " << e.what() << '\n';
      code = kExitRuntime;
    }
    meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    open_output(dir / "metadata.json") << meta.dump(2) << '\n';
    out_of(options) << json{{"termination", meta["termination"]}, {"output", dir.string()}}.dump() << '\n';
    return code;
  });
}

int cmd_duality_check(const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig cfg = resolve_config(options);
    const Grid grid = cfg.geometry.build();
    const SpeciesMeasure measure = cfg.measure();
    const GreenOperator green(grid);
    const double lambda = cfg.checks.lambda;
    Rng rng(cfg.seed);
    double gap_j = 0.0, gap_f = 0.0;
    for (int t = 0; t < cfg.checks.trials; ++t) {
      const ScalarField v = random_smooth_field(grid, rng, cfg.checks.amplitude);
      const SpeciesDensity rho_v = inner_min_rho(v, measure, grid, lambda);
      gap_j = std::max(gap_j, relative_gap(lyapunov_L(rho_v, v, measure, grid).value,
                                           mean_field_J(v, measure, grid, lambda).value));
      const SpeciesDensity rho = random_density(grid, measure, rng, lambda);
      const ScalarField v_rho = inner_min_v(rho, measure, grid, green);
      gap_f = std::max(gap_f, relative_gap(lyapunov_L(rho, v_rho, measure, grid).value,
                                           free_energy_F(rho, measure, grid, green).value));
    }
    const double tol = cfg.checks.duality_tolerance;
    const bool ok = gap_j <= tol && gap_f <= tol;
    out_of(options) << json{{"trials", cfg.checks.trials},
                            {"seed", cfg.seed},
                            {"lambda", lambda},
                            {"max_gap_L_J", gap_j},
                            {"max_gap_L_F", gap_f},
                            {"tolerance", tol},
                            {"passed", ok}}
                           .dump()
                    << '\n';
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_gradient_check(const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig cfg = resolve_config(options);
    const Grid grid = cfg.geometry.build();
    const SpeciesMeasure measure = cfg.measure();
    const CheckSpec& c = cfg.checks;
    Rng rng(cfg.seed);
    auto functional = [&](const ScalarField& v) {
      return c.variant == MassConstraint::individual ? functional_I(v, measure, grid, c.lambda).value
                                                     : mean_field_J(v, measure, grid, c.lambda).value;
    };
    double worst = 0.0;
    for (int t = 0; t < c.trials; ++t) {
      const ScalarField v = random_smooth_field(grid, rng, c.amplitude);
      const ScalarField xi = random_smooth_field(grid, rng, 1.0);
      const double flow = inner(meanfield_rhs(v, measure, grid, c.lambda, c.variant), xi, grid);
      const double fd = -(functional(v + c.fd_step * xi) - functional(v - c.fd_step * xi)) / (2.0 * c.fd_step);
      worst = std::max(worst, relative_gap(flow, fd));
    }
    const bool ok = worst <= c.gradient_tolerance;
    out_of(options) << json{{"trials", c.trials},
                            {"seed", cfg.seed},
                            {"variant", c.variant == MassConstraint::individual ? "individual" : "average"},
                            {"fd_step", c.fd_step},
                            {"max_relative_error", worst},
                            {"tolerance", c.gradient_tolerance},
                            {"passed", ok}}
                           .dump()
                    << '\n';
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_bubble_scan(const CommandOptions& options) {
  return guarded(options, [&] {
    const RunConfig cfg = resolve_config(options);
    const Grid grid = cfg.geometry.build();
    const SpeciesMeasure measure = cfg.measure();
    const BubbleSpec& b = cfg.bubbles;
    if (b.epsilons.size() < 4) throw ConfigError("bubbles.epsilons: at least 4 values needed for the fit");
    (void)select_band(measure, b.eta);
    const GreenOperator green(grid);

    const BubbleScan scan = expansion_report(grid, b.epsilons, green, kCriticalMass, cfg.threads);
    std::vector<CollapseResult> results;
    for (double lambda : b.lambdas)
      results.push_back(collapse_experiment(grid, measure, lambda, b.eta, b.epsilons, green, cfg.threads));

    const auto dir = output_directory(cfg);
    std::filesystem::create_directories(dir);
    {
      std::ofstream f = open_output(dir / "bubble_scan.csv");
      write_bubble_scan_csv(f, scan);
    }
    {
      std::ofstream f = open_output(dir / "collapse.csv");
      write_collapse_csv(f, results);
    }
    json experiments = json::array();
    int sign_changes = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      experiments.push_back({{"lambda", r.lambda},
                             {"slope", r.fit.slope},
                             {"slope_stderr", r.fit.slope_stderr},
                             {"intercept", r.fit.intercept},
                             {"residual_rms", r.fit.residual_rms},
                             {"predicted_slope", r.predicted_slope},
                             {"tolerance", r.tolerance},
                             {"verdict", to_string(r.verdict)}});
      if (i > 0 && r.verdict != results[i - 1].verdict) ++sign_changes;
    }
    const AlphaBand band = select_band(measure, b.eta);
    json summary{{"eta", b.eta},
                 {"band", {{"lo", band.lo}, {"hi", band.hi}, {"probability", band.probability}, {"mean_alpha", band.mean_alpha}}},
                 {"measure", measure_json(measure)},
                 {"expansion", {{"lambda", scan.lambda}, {"slope", scan.slope}, {"slope_stderr", scan.slope_stderr}}},
                 {"experiments", experiments},
                 {"verdict_changes", sign_changes}};
    open_output(dir / "bubble_summary.json") << summary.dump(2) << '\n';
    out_of(options) << summary.dump() << '\n';
    return kExitOk;
  });
}

int cmd_critical_mass(const CommandOptions& options) {
  return guarded(options, [&] {
    std::vector<Atom> atoms;
    if (!options.measure_literal.empty()) {
      atoms = parse_measure_literal(options.measure_literal);
    } else {
      atoms = resolve_config(options).atoms;
    }
    const SpeciesMeasure measure = make_measure(atoms);
    json result{{"measure", measure_json(measure)}, {"individual", critical_mass_individual(measure)}};
    if (const auto avg = critical_mass_average(measure))
      result["average"] = *avg;
    else
      result["average"] = "not covered";
    out_of(options) << result.dump() << '\n';
    return kExitOk;
  });
}

}  // namespace mschemo::cli
