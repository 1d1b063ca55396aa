#include "mschemo/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mschemo {

namespace {

void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw FunctionalError("lambda must be positive, got " + std::to_string(lambda));
}

void require_species(const SpeciesDensity& rho, const SpeciesMeasure& measure, const Grid& grid) {
  if (rho.atoms() != measure.size())
    throw FunctionalError("density has " + std::to_string(rho.atoms()) +
                          " species but the measure has " + std::to_string(measure.size()) +
                          " atoms");
  for (const auto& s : rho.species) require_conforming(s, grid, "species density");
}

FunctionalReport make_report(std::string name,
                             std::vector<std::pair<std::string, double>> terms) {
  FunctionalReport r;
  r.name = std::move(name);
  r.breakdown = std::move(terms);
  r.value = 0.0;
  for (const auto& [_, t] : r.breakdown) r.value += t;
  return r;
}

// Largest |alpha_j v| over atoms with the exponent guard applied.
double checked_exponent_bound(const ScalarField& v, const SpeciesMeasure& measure) {
  const double vmax = v.size() ? v.maxCoeff() : 0.0;
  const double vmin = v.size() ? v.minCoeff() : 0.0;
  double bound = 0.0;
  for (const auto& a : measure.atoms()) bound = std::max({bound, std::abs(a.alpha * vmax), std::abs(a.alpha * vmin)});
  if (!std::isfinite(bound) || bound > kExponentLimit)
    throw ExponentOverflow("exponent out of range: max |alpha v| = " + std::to_string(bound));
  return bound;
}

// log int e^{alpha v}, shifted by the maximum exponent.
double log_partition(const ScalarField& v, double alpha, const Grid& grid) {
  const double shift = alpha >= 0.0 ? alpha * v.maxCoeff() : alpha * v.minCoeff();
  const double sum = (alpha * v.array() - shift).exp().sum();
  return shift + std::log(grid.cell_area() * sum);
}

// log sum_j w_j int e^{alpha_j v}.
double log_average_partition(const ScalarField& v, const SpeciesMeasure& measure,
                             const Grid& grid) {
  std::vector<double> logs(measure.size());
  for (std::size_t j = 0; j < measure.size(); ++j)
    logs[j] = std::log(measure.weight(j)) + log_partition(v, measure.alpha(j), grid);
  const double m = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - m);
  return m + std::log(sum);
}

}  // namespace

double FunctionalReport::term(std::string_view addend) const {
  for (const auto& [n, t] : breakdown)
    if (n == addend) return t;
  throw std::out_of_range("no addend named " + std::string(addend) + " in " + name);
}

Membership AdmissibleCheck::membership() const {
  if (in_individual_set) return Membership::individual;
  if (in_average_set) return Membership::average;
  return Membership::neither;
}

double entropy_density(double t) {
  if (t == 0.0) return 0.0;
  return t * (std::log(t) - 1.0);
}

double entropy(const SpeciesDensity& rho, const SpeciesMeasure& measure, const Grid& grid) {
  require_species(rho, measure, grid);
  double total = 0.0;
  for (std::size_t j = 0; j < measure.size(); ++j) {
    double acc = 0.0;
    for (double t : rho[j]) {
      if (t < 0.0 || !std::isfinite(t))
        throw FunctionalError("entropy of a density with negative or non-finite entries");
      acc += entropy_density(t);
    }
    total += measure.weight(j) * acc;
  }
  return grid.cell_area() * total;
}

double dirichlet_energy(const ScalarField& v, const Grid& grid) {
  return 0.5 * inner(-laplacian_dirichlet(v, grid), v, grid);
}

FunctionalReport lyapunov_L(const SpeciesDensity& rho, const ScalarField& v,
                            const SpeciesMeasure& measure, const Grid& grid) {
  require_species(rho, measure, grid);
  require_conforming(v, grid, "lyapunov_L(v)");
  const double coupling = -inner(signed_source(rho, measure), v, grid);
  return make_report("L", {{"entropy", entropy(rho, measure, grid)},
                           {"dirichlet", dirichlet_energy(v, grid)},
                           {"coupling", coupling}});
}

FunctionalReport free_energy_F(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                               const Grid& grid, const GreenOperator& green) {
  require_species(rho, measure, grid);
  const ScalarField s = signed_source(rho, measure);
  const double interaction = -0.5 * inner(s, green.solve(s), grid);
  return make_report("F", {{"entropy", entropy(rho, measure, grid)}, {"coupling", interaction}});
}

FunctionalReport mean_field_J(const ScalarField& v, const SpeciesMeasure& measure,
                              const Grid& grid, double lambda) {
  require_positive_lambda(lambda);
  require_conforming(v, grid, "mean_field_J");
  checked_exponent_bound(v, measure);
  return make_report("J", {{"dirichlet", dirichlet_energy(v, grid)},
                           {"log", -lambda * log_average_partition(v, measure, grid)},
                           {"constant", lambda * (std::log(lambda) - 1.0)}});
}

FunctionalReport functional_I(const ScalarField& v, const SpeciesMeasure& measure,
                              const Grid& grid, double lambda) {
  require_positive_lambda(lambda);
  require_conforming(v, grid, "functional_I");
  checked_exponent_bound(v, measure);
  double logs = 0.0;
  for (std::size_t j = 0; j < measure.size(); ++j)
    logs += measure.weight(j) * log_partition(v, measure.alpha(j), grid);
  return make_report("I", {{"dirichlet", dirichlet_energy(v, grid)},
                           {"log", -lambda * logs},
                           {"constant", lambda * (std::log(lambda) - 1.0)}});
}

double hls_F0(const ScalarField& psi, const Grid& grid, const GreenOperator& green) {
  require_conforming(psi, grid, "hls_F0");
  double ent = 0.0;
  for (double t : psi) {
    if (t < 0.0 || !std::isfinite(t)) throw FunctionalError("hls_F0 of a negative density");
    ent += entropy_density(t);
  }
  return grid.cell_area() * ent - 0.5 * inner(psi, green.solve(psi), grid);
}

SpeciesDensity inner_min_rho(const ScalarField& v, const SpeciesMeasure& measure,
                             const Grid& grid, double lambda) {
  require_positive_lambda(lambda);
  require_conforming(v, grid, "inner_min_rho");
  checked_exponent_bound(v, measure);
  const double log_z = log_average_partition(v, measure, grid);
  SpeciesDensity rho;
  rho.species.reserve(measure.size());
  for (const auto& a : measure.atoms())
    rho.species.emplace_back(lambda * (a.alpha * v.array() - log_z).exp());
  return rho;
}

SpeciesDensity inner_min_rho_individual(const ScalarField& v, const SpeciesMeasure& measure,
                                        const Grid& grid, double lambda) {
  require_positive_lambda(lambda);
  require_conforming(v, grid, "inner_min_rho_individual");
  checked_exponent_bound(v, measure);
  SpeciesDensity rho;
  rho.species.reserve(measure.size());
  for (const auto& a : measure.atoms()) {
    const double log_z = log_partition(v, a.alpha, grid);
    rho.species.emplace_back(lambda * (a.alpha * v.array() - log_z).exp());
  }
  return rho;
}

ScalarField inner_min_v(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                        const Grid& grid, const GreenOperator& green) {
  require_species(rho, measure, grid);
  return tg_convolve(rho, measure, green);
}

std::vector<double> species_masses(const SpeciesDensity& rho, const Grid& grid) {
  std::vector<double> m;
  m.reserve(rho.atoms());
  for (const auto& s : rho.species) m.push_back(integrate_field(s, grid));
  return m;
}

double average_mass(const SpeciesDensity& rho, const SpeciesMeasure& measure, const Grid& grid) {
  require_species(rho, measure, grid);
  const auto m = species_masses(rho, grid);
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) total += measure.weight(j) * m[j];
  return total;
}

AdmissibleCheck check_admissible(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                                 const Grid& grid, double lambda) {
  require_positive_lambda(lambda);
  require_species(rho, measure, grid);
  AdmissibleCheck c;
  c.lambda = lambda;
  c.nonneg = rho.min_value() >= 0.0;
  c.per_species_mass = species_masses(rho, grid);
  c.total_mass = average_mass(rho, measure, grid);
  const double tol = 1e-10 * lambda;
  c.in_average_set = c.nonneg && std::abs(c.total_mass - lambda) <= tol;
  c.in_individual_set =
      c.nonneg && std::all_of(c.per_species_mass.begin(), c.per_species_mass.end(),
                              [&](double m) { return std::abs(m - lambda) <= tol; });
  return c;
}

}  // namespace mschemo
