#include "mschemo/random_fields.hpp"

#include <algorithm>
#include <cmath>

namespace mschemo {

ScalarField gaussian_bump(const Grid& grid, Point center, double width, double mass) {
  if (!(width > 0.0) || !(mass >= 0.0)) throw GridError("gaussian bump needs width > 0 and mass >= 0");
  ScalarField u(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point p = grid.position(k);
    const double r2 = (p.x - center.x) * (p.x - center.x) + (p.y - center.y) * (p.y - center.y);
    u[static_cast<Eigen::Index>(k)] = std::exp(-0.5 * r2 / (width * width));
  }
  const double total = integrate_field(u, grid);
  return u * (mass / total);
}

ScalarField random_smooth_field(const Grid& grid, Rng& rng, double amplitude) {
  const double extent = std::max(grid.length_x(), grid.length_y());
  const Point c = grid.center();
  ScalarField u = grid.zeros();
  for (int m = 0; m < 4; ++m) {
    const Point center{c.x + grid.length_x() * rng.uniform(-0.4, 0.4),
                       c.y + grid.length_y() * rng.uniform(-0.4, 0.4)};
    const double width = extent * rng.uniform(0.08, 0.3);
    const double a = amplitude * rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point p = grid.position(k);
      const double r2 = (p.x - center.x) * (p.x - center.x) + (p.y - center.y) * (p.y - center.y);
      u[static_cast<Eigen::Index>(k)] += a * std::exp(-0.5 * r2 / (width * width));
    }
  }
  return u;
}

SpeciesDensity random_density(const Grid& grid, const SpeciesMeasure& measure, Rng& rng,
                              double lambda) {
  SpeciesDensity rho;
  double total = 0.0;
  for (std::size_t j = 0; j < measure.size(); ++j) {
    ScalarField s = random_smooth_field(grid, rng, 1.5).array().exp();
    s *= rng.uniform(0.5, 2.0);
    total += measure.weight(j) * integrate_field(s, grid);
    rho.species.push_back(std::move(s));
  }
  for (auto& s : rho.species) s *= lambda / total;
  return rho;
}

}  // namespace mschemo
