#pragma once

#include <memory>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo {

class GreenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete Dirichlet Green operator (-Delta_h)^{-1} for one grid.
///
/// The sparse Cholesky factorization is computed once at construction and
/// shared read-only between copies, so concurrent solves are safe.
class GreenOperator {
 public:
  explicit GreenOperator(const Grid& grid);

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const SparseMatrix& matrix() const { return *matrix_; }

  /// v with -Delta_h v = f (one step of iterative refinement).
  [[nodiscard]] ScalarField solve(const ScalarField& f) const;

 private:
  using Factor = Eigen::SimplicialLDLT<SparseMatrix>;
  Grid grid_;
  std::shared_ptr<const SparseMatrix> matrix_;
  std::shared_ptr<const Factor> factor_;
};

ScalarField solve_poisson(const ScalarField& f, const GreenOperator& green);

/// G * psi; same operation as solve_poisson, named for the functionals.
inline ScalarField green_convolve(const ScalarField& psi, const GreenOperator& green) {
  return solve_poisson(psi, green);
}

/// Aggregate signed source sum_j w_j alpha_j rho_j.
ScalarField signed_source(const SpeciesDensity& rho, const SpeciesMeasure& measure);

/// Product-space convolution: G * (sum_j w_j alpha_j rho_j).
ScalarField tg_convolve(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                        const GreenOperator& green);

/// Robin function H(x0, x0) where G(x,y) = -(1/2pi) log|x-y| + H(x,y).
///
/// Solves for G_h(., x0) with a discrete delta, subtracts the free-space lattice
/// Green function on the axis rings at 2h, 3h and 4h, and extrapolates the ring
/// averages quadratically to radius 0. Requires x0 at least 4h from the
/// boundary.
double robin_self(const GreenOperator& green, std::size_t cell);

/// Free-space lattice Green function of -Delta_h at offset (n, 0) cells,
/// normalized to behave like -(1/2pi) log|x| far from the source. n in [0, 4].
double lattice_green_axis(int n, double h);

}  // namespace mschemo
