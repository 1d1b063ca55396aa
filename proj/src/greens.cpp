#include "mschemo/greens.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace mschemo {

GreenOperator::GreenOperator(const Grid& grid)
    : grid_(grid), matrix_(std::make_shared<SparseMatrix>(negative_laplacian_matrix(grid))) {
  if (grid.size() == 0) throw GreenError("Green operator needs at least one interior cell");
  auto factor = std::make_shared<Factor>();
  factor->compute(*matrix_);
  if (factor->info() != Eigen::Success) throw GreenError("Dirichlet Laplacian factorization failed");
  factor_ = std::move(factor);
}

ScalarField GreenOperator::solve(const ScalarField& f) const {
  require_conforming(f, grid_, "GreenOperator::solve");
  ScalarField v = factor_->solve(f);
  const ScalarField residual = f - (*matrix_) * v;
  v += factor_->solve(residual);
  if (!v.allFinite()) throw GreenError("Poisson solve produced non-finite values");
  return v;
}

ScalarField solve_poisson(const ScalarField& f, const GreenOperator& green) {
  return green.solve(f);
}

ScalarField signed_source(const SpeciesDensity& rho, const SpeciesMeasure& measure) {
  if (rho.atoms() != measure.size())
    throw GridError("density has " + std::to_string(rho.atoms()) + " species, measure has " +
                    std::to_string(measure.size()) + " atoms");
  ScalarField s = ScalarField::Zero(rho.atoms() ? rho[0].size() : 0);
  for (std::size_t j = 0; j < measure.size(); ++j)
    s += (measure.weight(j) * measure.alpha(j)) * rho[j];
  return s;
}

ScalarField tg_convolve(const SpeciesDensity& rho, const SpeciesMeasure& measure,
                        const GreenOperator& green) {
  return green.solve(signed_source(rho, measure));
}

double lattice_green_axis(int n, double h) {
  // Potential kernel of the simple random walk on Z^2 along an axis.
  constexpr double pi = std::numbers::pi;
  static constexpr std::array<double, 5> kernel{
      0.0, 1.0, 4.0 - 8.0 / pi, 17.0 - 48.0 / pi, 80.0 - 736.0 / (3.0 * pi)};
  if (n < 0 || n > 4) throw GreenError("lattice Green table covers offsets 0..4");
  const double offset = (2.0 * std::numbers::egamma + std::log(8.0)) / (4.0 * pi);
  return -0.25 * kernel[static_cast<std::size_t>(n)] + offset - std::log(h) / (2.0 * pi);
}

double robin_self(const GreenOperator& green, std::size_t cell) {
  const Grid& grid = green.grid();
  if (cell >= grid.size()) throw GreenError("robin_self: cell index out of range");
  const double h = grid.h();
  if (grid.distance_to_boundary(grid.position(cell)) < 4.0 * h * (1.0 - 1e-12))
    throw GreenError("robin_self: point closer than 4h to the boundary");

  ScalarField delta = grid.zeros();
  delta[static_cast<Eigen::Index>(cell)] = 1.0 / grid.cell_area();
  const ScalarField g = green.solve(delta);

  const auto [i0, j0] = grid.box_cell(cell);
  std::array<double, 3> ring{};
  for (int r = 2; r <= 4; ++r) {
    const std::array<int, 4> cells{grid.index(i0 - r, j0), grid.index(i0 + r, j0),
                                   grid.index(i0, j0 - r), grid.index(i0, j0 + r)};
    double sum = 0.0;
    for (int c : cells) {
      if (c == Grid::kBoundary) throw GreenError("robin_self: ring cell outside the domain");
      sum += g[c];
    }
    ring[static_cast<std::size_t>(r - 2)] = 0.25 * sum - lattice_green_axis(r, h);
  }
  // quadratic through r = 2, 3, 4 evaluated at r = 0
  return 6.0 * ring[0] - 8.0 * ring[1] + 3.0 * ring[2];
}

}  // namespace mschemo
