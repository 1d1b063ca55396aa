#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mschemo/greens.hpp"
#include "mschemo/random_fields.hpp"

using namespace mschemo;

namespace {

// Potential kernel of the planar random walk along an axis by direct quadrature:
// a(n) = (2/pi) int_0^pi (1 - cos n t) / sqrt((2 - cos t)^2 - 1) dt.
double potential_kernel(int n) {
  const int m = 20000;
  const double dt = kPi / m;
  auto f = [n](double t) {
    if (t == 0.0) return 0.0;
    const double c = std::cos(t);
    return (1.0 - std::cos(n * t)) / std::sqrt((2.0 - c) * (2.0 - c) - 1.0);
  };
  double sum = f(0.0) + f(kPi);
  for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * dt);
  return 2.0 * sum * dt / 3.0 / kPi;
}

double sin_mode(const Point& p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }

ScalarField sample_sin(const Grid& g) {
  ScalarField u(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) u[static_cast<Eigen::Index>(k)] = sin_mode(g.position(k));
  return u;
}

}  // namespace

TEST_CASE("poisson solve of the sine mode is second order") {
  double previous = 0.0;
  for (int n : {16, 32, 64}) {
    const Grid g = Grid::unit_square(n);
    const ScalarField u = sample_sin(g);
    const ScalarField v = GreenOperator(g).solve(2.0 * kPi * kPi * u);
    const double err = (v - u).cwiseAbs().maxCoeff();
    CHECK(err < 0.01);
    if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    previous = err;
  }
}

TEST_CASE("green operator inverts the negative laplacian") {
  const Grid g = Grid::disk(1.0, 50, {0.2, 0.1});
  const GreenOperator green(g);
  Rng rng(12);
  for (int t = 0; t < 5; ++t) {
    const ScalarField f = random_smooth_field(g, rng, 3.0);
    const ScalarField v = green.solve(f);
    CHECK((-laplacian_dirichlet(v, g) - f).norm() <= 1e-10 * f.norm());
  }
  CHECK_THROWS_AS(green.solve(ScalarField::Zero(3)), GridError);
}

TEST_CASE("green operator is symmetric and positive") {
  const Grid g = Grid::rectangle(1.0, 0.5, 40);
  const GreenOperator green(g);
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const ScalarField f = random_smooth_field(g, rng, 1.0);
    const ScalarField w = random_smooth_field(g, rng, 1.0);
    const double a = inner(green.solve(f), w, g);
    const double b = inner(f, green.solve(w), g);
    CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b)));
    CHECK(inner(green.solve(f), f, g) > 0.0);
    const ScalarField pos = f.array().exp();
    CHECK(green.solve(pos).minCoeff() > 0.0);
  }
}

TEST_CASE("disk green function approaches -(1/2pi) log r") {
  const Grid g = Grid::disk(1.0, 129);
  const GreenOperator green(g);
  const std::size_t c = g.nearest_cell({0.0, 0.0});
  CHECK(g.position(c).x == doctest::Approx(0.0));
  ScalarField delta = g.zeros();
  delta[static_cast<Eigen::Index>(c)] = 1.0 / g.cell_area();
  const ScalarField col = green.solve(delta);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = g.position(k);
    const double r = std::hypot(p.x, p.y);
    if (r < 0.2 || r > 0.8) continue;
    worst = std::max(worst, std::abs(col[static_cast<Eigen::Index>(k)] + std::log(r) / (2.0 * kPi)));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("lattice_green_axis matches potential kernel quadrature") {
  const double K = (2.0 * std::numbers::egamma + std::log(8.0)) / (4.0 * kPi);
  CHECK(potential_kernel(1) == doctest::Approx(1.0).epsilon(1e-10));
  for (int n = 0; n <= 4; ++n)
    for (double h : {0.1, 1.0 / 64}) {
      const double want = -0.25 * potential_kernel(n) + K - std::log(h) / (2.0 * kPi);
      CHECK(lattice_green_axis(n, h) == doctest::Approx(want).epsilon(1e-10));
    }
  // far-field form at n = 4
  CHECK(std::abs(lattice_green_axis(4, 0.01) + std::log(0.04) / (2.0 * kPi)) < 2e-3);
  CHECK_THROWS_AS(lattice_green_axis(5, 0.1), GreenError);
  CHECK_THROWS_AS(lattice_green_axis(-1, 0.1), GreenError);
}

TEST_CASE("robin_self on disks") {
  for (double radius : {1.0, 2.0}) {
    const Grid g = Grid::disk(radius, 129);
    const GreenOperator green(g);
    const std::size_t c = g.nearest_cell({0.0, 0.0});
    const double want = std::log(radius) / (2.0 * kPi);
    const double h_robin = robin_self(green, c);
    CHECK(std::abs(h_robin - want) < 5e-3);

    // direct route: G_h(x0, x0) minus the lattice self value
    ScalarField delta = g.zeros();
    delta[static_cast<Eigen::Index>(c)] = 1.0 / g.cell_area();
    const double direct = green.solve(delta)[static_cast<Eigen::Index>(c)] - lattice_green_axis(0, g.h());
    CHECK(std::abs(direct - want) < 5e-3);
    CHECK(std::abs(direct - h_robin) < 5e-3);
  }
}

TEST_CASE("robin_self off center on a disk") {
  const Grid g = Grid::disk(1.0, 129);
  const GreenOperator green(g);
  const std::size_t k = g.nearest_cell({0.5, 0.0});
  const Point p = g.position(k);
  const double r2 = p.x * p.x + p.y * p.y;
  CHECK(std::abs(robin_self(green, k) - std::log(1.0 - r2) / (2.0 * kPi)) < 5e-3);
}

TEST_CASE("robin_self on the unit square") {
  const Grid g = Grid::unit_square(65);
  const GreenOperator green(g);
  const double center = robin_self(green, g.nearest_cell({0.5, 0.5}));
  // sine series in x with the y dependence summed in closed form
  double want = std::log(2.0 / kPi) / (2.0 * kPi);
  for (int m = 1; m < 40; m += 2) want += (std::tanh(m * kPi / 2.0) - 1.0) / (m * kPi);
  CHECK(std::abs(center - want) < 5e-3);
  const double corner = robin_self(green, static_cast<std::size_t>(g.index(5, 5)));
  CHECK(corner < center);
  CHECK_THROWS_AS(robin_self(green, static_cast<std::size_t>(g.index(2, 30))), GreenError);
  CHECK_THROWS_AS(robin_self(green, g.size()), GreenError);
}

TEST_CASE("tg_convolve") {
  const Grid g = Grid::disk(1.0, 40);
  const GreenOperator green(g);
  Rng rng(31);
  const auto m = make_measure({{1.0, 0.3}, {-0.5, 0.2}, {0.25, 0.5}});
  const SpeciesDensity rho = random_density(g, m, rng, 10.0);

  SUBCASE("agrees with species-wise solves") {
    ScalarField want = g.zeros();
    for (std::size_t j = 0; j < m.size(); ++j) want += m.weight(j) * m.alpha(j) * green.solve(rho[j]);
    const ScalarField got = tg_convolve(rho, m, green);
    CHECK((got - want).norm() <= 1e-12 * want.norm());
  }
  SUBCASE("symmetric measure with equal densities gives zero") {
    const auto sym = make_measure({{1.0, 0.5}, {-1.0, 0.5}});
    SpeciesDensity same;
    same.species = {rho[0], rho[0]};
    CHECK(tg_convolve(same, sym, green).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("species count mismatch") {
    SpeciesDensity one;
    one.species = {rho[0]};
    CHECK_THROWS_AS(tg_convolve(one, m, green), GridError);
  }
}
