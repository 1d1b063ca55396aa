#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "mschemo/functionals.hpp"
#include "mschemo/greens.hpp"
#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo {

enum class Regime { full, smoluchowski, meanfield_average, meanfield_individual };
enum class StepPolicy { fixed, cfl_adaptive };
enum class Termination { horizon, collapse, steady, max_steps };

const char* to_string(Regime r);
const char* to_string(Termination t);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A step that could not be taken (CFL violation, negative density).
class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  Regime regime = Regime::full;
  /// Per-atom relaxation times delta_alpha; empty means 1 for every atom.
  std::vector<double> delta;
  double epsilon = 1.0;
  /// Conserved mass for the mean-field regimes.
  double lambda = 0.0;
  StepPolicy policy = StepPolicy::fixed;
  /// Fixed step, or the largest step allowed under the adaptive policy.
  double dt = 1e-3;
  double cfl_safety = 0.5;
  double horizon = 0.0;
  /// Diagnostics every `cadence` steps (the first and last states always).
  int cadence = 1;
  std::vector<double> snapshot_times;
  /// Relative state change per unit time below which the run is stationary.
  double steady_tolerance = 1e-12;
  std::size_t max_steps = 10'000'000;
  /// Collapse when one cell holds this fraction of a species' mass.
  double collapse_mass_fraction = 0.5;

  [[nodiscard]] double delta_for(std::size_t atom) const { return delta.empty() ? 1.0 : delta[atom]; }
  [[nodiscard]] double delta_min() const;
};

/// Throws ConfigError when the configuration does not fit the measure.
void validate(const SimConfig& config, const SpeciesMeasure& measure);

/// Densities are empty in the mean-field regimes; the implied rho is derived
/// from v on demand.
struct SimState {
  double time = 0.0;
  SpeciesDensity rho;
  ScalarField v;
};

struct Diagnostics {
  double time = 0.0;
  double L = 0.0;
  double F = 0.0;
  double J_or_I = 0.0;
  std::vector<double> masses;
  double total_mass = 0.0;
  double min_rho = 0.0;
  double max_abs_v = 0.0;
};

struct Snapshot {
  double time = 0.0;
  SimState state;
};

struct Trajectory {
  std::vector<Diagnostics> records;
  std::vector<Snapshot> snapshots;
  SimState final_state;
  Termination termination = Termination::horizon;
  std::string message;
  std::size_t steps = 0;
};

/// Drift time-step bound min(delta_0, eps) h / (2 max|alpha| max|grad_h v|);
/// infinity for a flat potential. The time scale is delta_0 for the
/// Smoluchowski regime and 1 in the mean-field regimes.
double cfl_bound(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                 const SimConfig& config);

/// Largest step for which explicit Euler on delta rho_t = div_SG(rho) keeps
/// rho >= 0: delta h^2 / max_i sum_faces B(-s).
double explicit_euler_dt_bound(const ScalarField& v, double alpha, double delta, const Grid& grid);

/// Density implied by v in the mean-field regimes.
SpeciesDensity implied_density(const ScalarField& v, const SpeciesMeasure& measure,
                               const Grid& grid, const SimConfig& config);

/// Time integrator holding the factorization caches for one grid and measure.
///
/// Densities advance by a linearly implicit Scharfetter-Gummel step with the
/// potential frozen, the potential by implicit diffusion with an explicit
/// source. Each regime's Lyapunov functional is nonincreasing for every step
/// size; see README for the splitting argument.
class Stepper {
 public:
  Stepper(const Grid& grid, const SpeciesMeasure& measure, const GreenOperator& green,
          SimConfig config);

  [[nodiscard]] const SimConfig& config() const { return config_; }
  /// Step size chosen by the policy for this state (not clipped to the horizon).
  [[nodiscard]] double step_size(const SimState& state) const;
  /// One step of size dt. Throws StepError (fixed-step CFL violation, negative
  /// density) or ExponentOverflow (mean-field blow-up).
  [[nodiscard]] SimState step(const SimState& state, double dt);
  [[nodiscard]] Diagnostics diagnose(const SimState& state) const;

 private:
  void check_cfl(const SimState& state, double dt) const;
  ScalarField advance_density(const ScalarField& rho, const ScalarField& v, double alpha,
                              double tau);
  ScalarField implicit_diffusion(const ScalarField& rhs, double tau);

  Grid grid_;
  SpeciesMeasure measure_;
  GreenOperator green_;
  SimConfig config_;
  SparseMatrix neg_laplacian_;
  Eigen::SparseLU<SparseMatrix> density_solver_;
  bool density_pattern_ready_ = false;
  std::map<double, std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> diffusion_solvers_;
};

SimState step_full(const SimState& state, const SimConfig& config, const SpeciesMeasure& measure,
                   const Grid& grid, const GreenOperator& green);
SimState step_smoluchowski(const SimState& state, const SimConfig& config,
                           const SpeciesMeasure& measure, const Grid& grid,
                           const GreenOperator& green);
SimState step_meanfield_average(const SimState& state, const SimConfig& config,
                                const SpeciesMeasure& measure, const Grid& grid);
SimState step_meanfield_individual(const SimState& state, const SimConfig& config,
                                   const SpeciesMeasure& measure, const Grid& grid);

/// Called with every diagnostic record as it is produced.
using RecordSink = std::function<void(const Diagnostics&)>;

/// Integrates to the horizon, to collapse, or to a steady state. Step errors
/// are rethrown as StepError annotated with the simulation time.
Trajectory run(const SimState& initial, const SimConfig& config, const SpeciesMeasure& measure,
               const Grid& grid, const GreenOperator& green, const RecordSink& sink = {});

enum class MassConstraint { average, individual };

/// Mean-field right-hand side Delta_h v + sum_j w_j alpha_j rho_j with rho the
/// density implied by v under the given mass constraint.
ScalarField meanfield_rhs(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                          double lambda, MassConstraint variant);

/// Discrete L2 norm of the mean-field right-hand side.
double steady_state_residual(const ScalarField& v, const SpeciesMeasure& measure, const Grid& grid,
                             double lambda, MassConstraint variant);

/// CSV header: time,L,F,J_or_I,mass_0..mass_{K-1},min_rho,max_abs_v
void write_trajectory_header(std::ostream& out, std::size_t atoms);
void write_trajectory_row(std::ostream& out, const Diagnostics& d);

}  // namespace mschemo
