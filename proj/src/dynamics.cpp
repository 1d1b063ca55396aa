#include "mschemo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mschemo {

namespace {

constexpr double kCollapseDensityScale = 1e12;

bool evolves_density(Regime r) { return r == Regime::full || r == Regime::smoluchowski; }

std::string format_time(double t) {
  std::ostringstream os;
  os << std::setprecision(10) << t;
  return os.str();
}

double state_norm(const SimState& s) {
  double sq = s.v.squaredNorm();
  for (const auto& r : s.rho.species) sq += r.squaredNorm();
  return std::sqrt(sq);
}

double state_distance(const SimState& a, const SimState& b) {
  double sq = (a.v - b.v).squaredNorm();
  for (std::size_t j = 0; j < a.rho.atoms() && j < b.rho.atoms(); ++j)
    sq += (a.rho[j] - b.rho[j]).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::full: return "full";
    case Regime::smoluchowski: return "smoluchowski";
    case Regime::meanfield_average: return "meanfield_average";
    case Regime::meanfield_individual: return "meanfield_individual";
  }
  return "unknown";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::horizon: return "horizon";
    case Termination::collapse: return "collapse";
    case Termination::steady: return "steady";
    case Termination::max_steps: return "max_steps";
  }
  return "unknown";
}

double SimConfig::delta_min() const {
  if (delta.empty()) return 1.0;
  return *std::min_element(delta.begin(), delta.end());
}

void validate(const SimConfig& c, const SpeciesMeasure& measure) {
  if (!c.delta.empty() && c.delta.size() != measure.size())
    throw ConfigError("delta has " + std::to_string(c.delta.size()) + " entries for " +
                      std::to_string(measure.size()) + " atoms");
  for (double d : c.delta)
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("every delta_alpha must be positive");
  if (c.regime == Regime::full && !(c.epsilon > 0.0))
    throw ConfigError("the full regime needs epsilon > 0");
  if ((c.regime == Regime::meanfield_average || c.regime == Regime::meanfield_individual) &&
      !(c.lambda > 0.0))
    throw ConfigError("mean-field regimes need lambda > 0");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt must be positive");
  if (!(c.cfl_safety > 0.0) || c.cfl_safety > 1.0) throw ConfigError("cfl_safety must lie in (0, 1]");
  if (!(c.horizon >= 0.0) || !std::isfinite(c.horizon)) throw ConfigError("horizon must be >= 0");
  if (c.cadence < 1) throw ConfigError("diagnostic cadence must be >= 1");
  if (!(c.steady_tolerance >= 0.0)) throw ConfigError("steady_tolerance must be >= 0");
  if (!(c.collapse_mass_fraction > 0.0) || c.collapse_mass_fraction > 1.0)
    throw ConfigError("collapse_mass_fraction must lie in (0, 1]");
  for (double t : c.snapshot_times)
    if (!(t >= 0.0)) throw ConfigError("snapshot times must be >= 0");
}

double cfl_bound(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                 const SimConfig& config) {
  double scale = 1.0;
  if (config.regime == Regime::full) scale = std::min(config.delta_min(), config.epsilon);
  if (config.regime == Regime::smoluchowski) scale = config.delta_min();
  const double drift = measure.max_abs_alpha() * max_gradient(v, grid);
  if (drift == 0.0) return std::numeric_limits<double>::infinity();
  return scale * grid.h() / (2.0 * drift);
}

double explicit_euler_dt_bound(const ScalarField& v, double alpha, double delta, const Grid& grid) {
  require_conforming(v, grid, "explicit_euler_dt_bound");
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double out = 0.0;
    for (int nb : grid.neighbors(k))
      if (nb != Grid::kBoundary) out += bernoulli(-alpha * (v[nb] - v[k]));
    worst = std::max(worst, out);
  }
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return delta * grid.cell_area() / worst;
}

SpeciesDensity implied_density(const ScalarField& v, const SpeciesMeasure& measure,
                               const Grid& grid, const SimConfig& config) {
  if (config.regime == Regime::meanfield_individual)
    return inner_min_rho_individual(v, measure, grid, config.lambda);
  return inner_min_rho(v, measure, grid, config.lambda);
}

Stepper::Stepper(const Grid& grid, const SpeciesMeasure& measure, const GreenOperator& green,
                 SimConfig config)
    : grid_(grid),
      measure_(measure),
      green_(green),
      config_(std::move(config)),
      neg_laplacian_(negative_laplacian_matrix(grid)) {
  validate(config_, measure_);
  if (!(green_.grid() == grid_)) throw ConfigError("Green operator was built for a different grid");
}

double Stepper::step_size(const SimState& state) const {
  if (config_.policy == StepPolicy::fixed) return config_.dt;
  ScalarField v = config_.regime == Regime::smoluchowski ? tg_convolve(state.rho, measure_, green_) : state.v;
  return std::min(config_.dt, config_.cfl_safety * cfl_bound(v, measure_, grid_, config_));
}

void Stepper::check_cfl(const SimState& state, double dt) const {
  if (config_.policy != StepPolicy::fixed) return;
  const double bound = cfl_bound(state.v, measure_, grid_, config_);
  if (dt > bound)
    throw StepError("CFL violation: dt = " + format_time(dt) + " exceeds bound " + format_time(bound));
}

ScalarField Stepper::advance_density(const ScalarField& rho, const ScalarField& v, double alpha,
                                     double tau) {
  // (I - tau A_SG(v)) rho_new = rho; columns sum to one, so mass is conserved.
  const double c = tau / grid_.cell_area();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    double diag = 1.0;
    for (int nb : grid_.neighbors(k)) {
      if (nb == Grid::kBoundary) continue;
      const double s = alpha * (v[nb] - v[k]);
      diag += c * bernoulli(-s);
      entries.emplace_back(static_cast<int>(k), nb, -c * bernoulli(s));
    }
    entries.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
  }
  const auto n = static_cast<Eigen::Index>(grid_.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  if (!density_pattern_ready_) {
    density_solver_.analyzePattern(m);
    density_pattern_ready_ = true;
  }
  density_solver_.factorize(m);
  if (density_solver_.info() != Eigen::Success) throw StepError("density system factorization failed");
  ScalarField out = density_solver_.solve(rho);
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  for (auto& x : out) {
    if (x < 0.0) {
      if (x < -1e-13 * scale) throw StepError("negative density after step (dt too large)");
      x = 0.0;
    }
  }
  return out;
}

ScalarField Stepper::implicit_diffusion(const ScalarField& rhs, double tau) {
  auto& solver = diffusion_solvers_[tau];
  if (!solver) {
    SparseMatrix m = tau * neg_laplacian_;
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.coeffRef(k, k) += 1.0;
    solver = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(m);
    if (solver->info() != Eigen::Success) throw StepError("diffusion system factorization failed");
    if (diffusion_solvers_.size() > 8) {
      // adaptive runs produce a new tau every step; keep only this one
      auto keep = solver;
      diffusion_solvers_.clear();
      diffusion_solvers_[tau] = keep;
    }
  }
  return diffusion_solvers_[tau]->solve(rhs);
}

SimState Stepper::step(const SimState& state, double dt) {
  if (!(dt > 0.0)) throw StepError("step size must be positive");
  SimState next;
  next.time = state.time + dt;
  switch (config_.regime) {
    case Regime::full: {
      check_cfl(state, dt);
      next.rho.species.resize(measure_.size());
      for (std::size_t j = 0; j < measure_.size(); ++j)
        next.rho[j] = advance_density(state.rho[j], state.v, measure_.alpha(j), dt / config_.delta_for(j));
      const double tau = dt / config_.epsilon;
      next.v = implicit_diffusion(state.v + tau * signed_source(next.rho, measure_), tau);
      break;
    }
    case Regime::smoluchowski: {
      SimState slaved = state;
      slaved.v = tg_convolve(state.rho, measure_, green_);
      check_cfl(slaved, dt);
      next.rho.species.resize(measure_.size());
      for (std::size_t j = 0; j < measure_.size(); ++j)
        next.rho[j] = advance_density(state.rho[j], slaved.v, measure_.alpha(j), dt / config_.delta_for(j));
      next.v = tg_convolve(next.rho, measure_, green_);
      break;
    }
    case Regime::meanfield_average:
    case Regime::meanfield_individual: {
      check_cfl(state, dt);
      const SpeciesDensity rho = implied_density(state.v, measure_, grid_, config_);
      next.v = implicit_diffusion(state.v + dt * signed_source(rho, measure_), dt);
      break;
    }
  }
  if (!next.v.allFinite()) throw StepError("non-finite potential after step");
  return next;
}

Diagnostics Stepper::diagnose(const SimState& state) const {
  Diagnostics d;
  d.time = state.time;
  d.max_abs_v = state.v.size() ? state.v.cwiseAbs().maxCoeff() : 0.0;
  const bool evolving = evolves_density(config_.regime);
  const SpeciesDensity rho = evolving ? state.rho : implied_density(state.v, measure_, grid_, config_);
  d.masses = species_masses(rho, grid_);
  d.total_mass = average_mass(rho, measure_, grid_);
  d.min_rho = rho.min_value();
  d.L = lyapunov_L(rho, state.v, measure_, grid_).value;
  d.F = free_energy_F(rho, measure_, grid_, green_).value;
  const double lambda = evolving ? d.total_mass : config_.lambda;
  d.J_or_I = std::numeric_limits<double>::quiet_NaN();
  if (lambda > 0.0) {
    try {
      d.J_or_I = config_.regime == Regime::meanfield_individual
                     ? functional_I(state.v, measure_, grid_, lambda).value
                     : mean_field_J(state.v, measure_, grid_, lambda).value;
    } catch (const ExponentOverflow&) {
    }
  }
  return d;
}

namespace {

SimState one_step(const SimState& state, const SimConfig& config, const SpeciesMeasure& measure,
                  const Grid& grid, const GreenOperator& green, Regime expected) {
  if (config.regime != expected)
    throw ConfigError(std::string("configuration regime ") + to_string(config.regime) +
                      " does not match " + to_string(expected) + " step");
  Stepper stepper(grid, measure, green, config);
  return stepper.step(state, stepper.step_size(state));
}

std::optional<std::string> detect_collapse(const SimState& state, const SpeciesMeasure& measure,
                                           const Grid& grid, const SimConfig& config) {
  const SpeciesDensity rho =
      evolves_density(config.regime) ? state.rho : implied_density(state.v, measure, grid, config);
  const double limit = kCollapseDensityScale / grid.cell_area();
  for (std::size_t j = 0; j < rho.atoms(); ++j) {
    const double peak = rho[j].maxCoeff();
    const double mass = integrate_field(rho[j], grid);
    if (peak > limit) return "density exceeds 1e12/h^2 in species " + std::to_string(j);
    if (mass > 0.0 && peak * grid.cell_area() >= config.collapse_mass_fraction * mass)
      return "single-cell concentration of species " + std::to_string(j);
  }
  return std::nullopt;
}

}  // namespace

SimState step_full(const SimState& state, const SimConfig& config, const SpeciesMeasure& measure,
                   const Grid& grid, const GreenOperator& green) {
  return one_step(state, config, measure, grid, green, Regime::full);
}

SimState step_smoluchowski(const SimState& state, const SimConfig& config,
                           const SpeciesMeasure& measure, const Grid& grid,
                           const GreenOperator& green) {
  return one_step(state, config, measure, grid, green, Regime::smoluchowski);
}

SimState step_meanfield_average(const SimState& state, const SimConfig& config,
                                const SpeciesMeasure& measure, const Grid& grid) {
  return one_step(state, config, measure, grid, GreenOperator(grid), Regime::meanfield_average);
}

SimState step_meanfield_individual(const SimState& state, const SimConfig& config,
                                   const SpeciesMeasure& measure, const Grid& grid) {
  return one_step(state, config, measure, grid, GreenOperator(grid), Regime::meanfield_individual);
}

Trajectory run(const SimState& initial, const SimConfig& config, const SpeciesMeasure& measure,
               const Grid& grid, const GreenOperator& green, const RecordSink& sink) {
  Stepper stepper(grid, measure, green, config);
  SimState state = initial;
  require_conforming(state.v, grid, "initial potential");
  if (evolves_density(config.regime)) {
    if (state.rho.atoms() != measure.size())
      throw ConfigError("initial density does not match the measure");
    if (state.rho.min_value() < 0.0) throw ConfigError("initial density has negative entries");
    if (config.regime == Regime::smoluchowski) state.v = tg_convolve(state.rho, measure, green);
  } else {
    state.rho.species.clear();
  }

  Trajectory traj;
  auto record = [&](const SimState& s) {
    traj.records.push_back(stepper.diagnose(s));
    if (sink) sink(traj.records.back());
  };
  std::vector<double> snaps = config.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto take_snapshots = [&](const SimState& s) {
    while (next_snap < snaps.size() && snaps[next_snap] <= s.time + 1e-12 * std::max(1.0, s.time)) {
      traj.snapshots.push_back({s.time, s});
      ++next_snap;
    }
  };

  record(state);
  take_snapshots(state);
  const double horizon = config.horizon;
  const double time_eps = 1e-12 * std::max(1.0, horizon);
  bool recorded_last = true;
  traj.termination = Termination::horizon;

  while (state.time < horizon - time_eps) {
    if (traj.steps >= config.max_steps) {
      traj.termination = Termination::max_steps;
      break;
    }
    double dt = std::min(stepper.step_size(state), horizon - state.time);
    if (next_snap < snaps.size() && snaps[next_snap] > state.time)
      dt = std::min(dt, snaps[next_snap] - state.time);
    SimState next;
    try {
      next = stepper.step(state, dt);
    } catch (const ExponentOverflow& e) {
      traj.termination = Termination::collapse;
      traj.message = std::string(e.what()) + " at t=" + format_time(state.time);
      break;
    } catch (const std::exception& e) {
      throw StepError(std::string(e.what()) + " at t=" + format_time(state.time));
    }
    if (horizon - next.time < time_eps) next.time = horizon;
    ++traj.steps;
    const double change = state_distance(next, state) / std::max(state_norm(next), 1e-300) / dt;
    state = std::move(next);
    recorded_last = false;

    std::optional<std::string> collapse;
    try {
      collapse = detect_collapse(state, measure, grid, config);
    } catch (const ExponentOverflow& e) {
      collapse = e.what();
    }
    if (collapse) {
      traj.termination = Termination::collapse;
      traj.message = *collapse + " at t=" + format_time(state.time);
      break;
    }
    take_snapshots(state);
    if (change < config.steady_tolerance) {
      traj.termination = Termination::steady;
      traj.message = "relative change " + format_time(change) + " per unit time";
      break;
    }
    if (traj.steps % static_cast<std::size_t>(config.cadence) == 0) {
      record(state);
      recorded_last = true;
    }
  }
  if (!recorded_last) {
    try {
      record(state);
    } catch (const ExponentOverflow&) {
      // collapsed state whose implied density is out of range
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

ScalarField meanfield_rhs(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                          double lambda, MassConstraint variant) {
  const SpeciesDensity rho = variant == MassConstraint::individual
                                 ? inner_min_rho_individual(v, measure, grid, lambda)
                                 : inner_min_rho(v, measure, grid, lambda);
  return laplacian_dirichlet(v, grid) + signed_source(rho, measure);
}

double steady_state_residual(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                             double lambda, MassConstraint variant) {
  return l2_norm(meanfield_rhs(v, measure, grid, lambda, variant), grid);
}

void write_trajectory_header(std::ostream& out, std::size_t atoms) {
  out << "time,L,F,J_or_I";
  for (std::size_t j = 0; j < atoms; ++j) out << ",mass_" << j;
  out << ",min_rho,max_abs_v\n";
}

void write_trajectory_row(std::ostream& out, const Diagnostics& d) {
  out << std::setprecision(17) << d.time << ',' << d.L << ',' << d.F << ',' << d.J_or_I;
  for (double m : d.masses) out << ',' << m;
  out << ',' << d.min_rho << ',' << d.max_abs_v << '\n';
}

}  // namespace mschemo
