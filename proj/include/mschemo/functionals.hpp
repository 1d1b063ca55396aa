#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mschemo/greens.hpp"
#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo {

class FunctionalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when some alpha_j * v leaves the double-precision exponent range.
class ExponentOverflow : public FunctionalError {
 public:
  using FunctionalError::FunctionalError;
};

inline constexpr double kExponentLimit = 700.0;

/// Value of a functional with its named addends; value is their sum.
struct FunctionalReport {
  std::string name;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> breakdown;

  /// Addend by name; throws std::out_of_range when absent.
  [[nodiscard]] double term(std::string_view addend) const;
};

enum class Membership { average, individual, neither };

struct AdmissibleCheck {
  bool nonneg = false;
  double total_mass = 0.0;  // sum_j w_j int rho_j
  std::vector<double> per_species_mass;
  double lambda = 0.0;
  bool in_average_set = false;     // total mass within 1e-10 lambda of lambda
  bool in_individual_set = false;  // every species mass within 1e-10 lambda of lambda

  /// Individual membership implies average membership; the stronger one wins.
  [[nodiscard]] Membership membership() const;
};

/// f(t) = t (log t - 1), f(0) = 0.
double entropy_density(double t);

/// sum_j w_j h^2 sum_cells f(rho_j). Throws FunctionalError on negative entries.
double entropy(const SpeciesDensity& rho, const SpeciesMeasure& measure, const Grid& grid);

/// (1/2) int |grad v|^2 computed as (1/2) <-Delta_h v, v>.
double dirichlet_energy(const ScalarField& v, const Grid& grid);

/// L(rho, v) = entropy + dirichlet - sum_j w_j alpha_j int rho_j v.
FunctionalReport lyapunov_L(const SpeciesDensity& rho, const ScalarField& v,
                            const SpeciesMeasure& measure, const Grid& grid);

/// F(rho) = entropy - (1/2) int s G*s with s = sum_j w_j alpha_j rho_j.
FunctionalReport free_energy_F(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                               const Grid& grid, const GreenOperator& green);

/// J(v) = dirichlet - lambda log(sum_j w_j int e^{alpha_j v}) + lambda (log lambda - 1).
FunctionalReport mean_field_J(const ScalarField& v, const SpeciesMeasure& measure,
                              const Grid& grid, double lambda);

/// I(v) = dirichlet - lambda sum_j w_j log(int e^{alpha_j v}) + lambda (log lambda - 1).
FunctionalReport functional_I(const ScalarField& v, const SpeciesMeasure& measure,
                              const Grid& grid, double lambda);

/// Single-species free energy int psi (log psi - 1) - (1/2) int psi G*psi.
double hls_F0(const ScalarField& psi, const Grid& grid, const GreenOperator& green);

/// Minimizer of L(., v) over densities with average mass lambda:
/// rho_j = lambda e^{alpha_j v} / sum_k w_k int e^{alpha_k v}.
SpeciesDensity inner_min_rho(const ScalarField& v, const SpeciesMeasure& measure,
                             const Grid& grid, double lambda);

/// Minimizer of L(., v) with every species mass fixed to lambda:
/// rho_j = lambda e^{alpha_j v} / int e^{alpha_j v}.
SpeciesDensity inner_min_rho_individual(const ScalarField& v, const SpeciesMeasure& measure,
                                        const Grid& grid, double lambda);

/// Minimizer of L(rho, .): the Dirichlet potential -Delta v = sum_j w_j alpha_j rho_j.
ScalarField inner_min_v(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                        const Grid& grid, const GreenOperator& green);

/// Per-species masses int rho_j and the measure-weighted total.
std::vector<double> species_masses(const SpeciesDensity& rho, const Grid& grid);
double average_mass(const SpeciesDensity& rho, const SpeciesMeasure& measure, const Grid& grid);

AdmissibleCheck check_admissible(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                                 const Grid& grid, double lambda);

}  // namespace mschemo
