#include <doctest.h>

#include <cmath>
#include <vector>

#include "mschemo/grid.hpp"
#include "mschemo/random_fields.hpp"

using namespace mschemo;

namespace {

ScalarField sample(const Grid& g, double (*f)(double, double)) {
  ScalarField u(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = g.position(k);
    u[static_cast<Eigen::Index>(k)] = f(p.x, p.y);
  }
  return u;
}

double sin_mode(double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); }

// Dense 5-point Dirichlet Laplacian of a full nx-by-ny box, written out from
// the (i, j) stencil with ghost value -u outside.
Eigen::MatrixXd dense_box_laplacian(int nx, int ny, double h) {
  const int n = nx * ny;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      const int di[4] = {-1, 1, 0, 0};
      const int dj[4] = {0, 0, -1, 1};
      for (int f = 0; f < 4; ++f) {
        const int ii = i + di[f], jj = j + dj[f];
        a(k, k) -= 1.0 / (h * h);
        if (ii < 0 || jj < 0 || ii >= nx || jj >= ny)
          a(k, k) -= 1.0 / (h * h);
        else
          a(k, jj * nx + ii) += 1.0 / (h * h);
      }
    }
  return a;
}

// s / (e^s - 1) in long double without the series branch.
double bernoulli_reference(double s) {
  if (s == 0.0) return 1.0;
  const long double ls = s;
  return static_cast<double>(ls / std::expm1(ls));
}

}  // namespace

TEST_CASE("rectangle geometry") {
  const Grid g = Grid::unit_square(8);
  CHECK(g.size() == 64);
  CHECK(g.h() == 0.125);
  CHECK(g.area() == 1.0);
  CHECK(integrate_field(g.constant(1.0), g) == 1.0);
  const Grid r = Grid::rectangle(2.0, 1.0, 16);
  CHECK(r.ny() == 8);
  CHECK(r.area() == doctest::Approx(2.0));
  CHECK_THROWS_AS(Grid::rectangle(1.0, 0.3, 4), GridError);
  CHECK_THROWS_AS(Grid::rectangle(-1.0, 1.0, 4), GridError);
  CHECK_THROWS_AS(Grid::disk(0.0, 4), GridError);
}

TEST_CASE("disk area converges") {
  const Grid g = Grid::disk(1.0, 256);
  CHECK(g.h() == doctest::Approx(1.0 / 128));
  CHECK(std::abs(integrate_field(g.constant(1.0), g) - kPi) < 0.01 * kPi);
  for (std::size_t k = 0; k < g.size(); k += 97) {
    const Point p = g.position(k);
    CHECK(p.x * p.x + p.y * p.y < 1.0);
  }
}

TEST_CASE("neighbors and indices agree") {
  const Grid g = Grid::disk(1.0, 40, {0.3, -0.2});
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto [i, j] = g.box_cell(k);
    CHECK(g.index(i, j) == static_cast<int>(k));
    const auto& nb = g.neighbors(k);
    CHECK(nb[Grid::west] == g.index(i - 1, j));
    CHECK(nb[Grid::east] == g.index(i + 1, j));
    CHECK(nb[Grid::south] == g.index(i, j - 1));
    CHECK(nb[Grid::north] == g.index(i, j + 1));
  }
  CHECK(g.index(-1, 0) == Grid::kBoundary);
  CHECK(g.nearest_cell(g.center()) < g.size());
}

TEST_CASE("laplacian_dirichlet stencil") {
  const Grid g = Grid::unit_square(3);
  CHECK(laplacian_dirichlet(g.zeros(), g).norm() == 0.0);
  ScalarField e = g.zeros();
  const int c = g.index(1, 1);
  e[c] = 1.0;
  const ScalarField row = laplacian_dirichlet(e, g);
  const double inv_h2 = 1.0 / g.cell_area();
  CHECK(row[c] == doctest::Approx(-4.0 * inv_h2));
  for (int nb : g.neighbors(static_cast<std::size_t>(c))) CHECK(row[nb] == doctest::Approx(inv_h2));
  CHECK(row[g.index(0, 0)] == 0.0);
}

TEST_CASE("laplacian_dirichlet matches dense box stencil") {
  const Grid g = Grid::rectangle(1.5, 1.0, 12);
  const Eigen::MatrixXd a = dense_box_laplacian(g.nx(), g.ny(), g.h());
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    ScalarField u(static_cast<Eigen::Index>(g.size()));
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    const ScalarField want = a * u;
    CHECK((laplacian_dirichlet(u, g) - want).norm() <= 1e-12 * want.norm());
    CHECK((-(negative_laplacian_matrix(g) * u) - want).norm() <= 1e-12 * want.norm());
  }
}

TEST_CASE("laplacian_dirichlet on the sine mode is second order") {
  double previous = 0.0;
  for (int n : {16, 32, 64}) {
    const Grid g = Grid::unit_square(n);
    const ScalarField u = sample(g, sin_mode);
    const double err = (laplacian_dirichlet(u, g) + 2.0 * kPi * kPi * u).cwiseAbs().maxCoeff();
    CHECK(err < 2.0 * kPi * kPi * 0.02);
    if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    previous = err;
  }
}

TEST_CASE("laplacian_dirichlet is symmetric and negative definite") {
  const Grid g = Grid::disk(1.0, 30);
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const ScalarField u = random_smooth_field(g, rng, 1.0);
    const ScalarField w = random_smooth_field(g, rng, 1.0);
    const double a = inner(laplacian_dirichlet(u, g), w, g);
    const double b = inner(u, laplacian_dirichlet(w, g), g);
    CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b)));
    CHECK(inner(laplacian_dirichlet(u, g), u, g) < 0.0);
  }
}

TEST_CASE("bernoulli") {
  CHECK(bernoulli(0.0) == 1.0);
  for (double s : {-50.0, -3.0, -1e-4, -9.9e-6, -1e-7, 1e-9, 9.9e-6, 1.01e-5, 2e-3, 0.7, 30.0})
    CHECK(bernoulli(s) == doctest::Approx(bernoulli_reference(s)).epsilon(1e-14));
  for (double s : {0.1, 1.0, 5.0}) CHECK(bernoulli(-s) - bernoulli(s) == doctest::Approx(s));
}

TEST_CASE("sg_flux_divergence matches face flux oracle") {
  const Grid g = Grid::disk(1.0, 24);
  Rng rng(21);
  const ScalarField v = random_smooth_field(g, rng, 3.0);
  const ScalarField rho = random_smooth_field(g, rng, 1.0).array().exp();
  for (double alpha : {1.0, -0.6, 0.25}) {
    ScalarField want = g.zeros();
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int j : g.neighbors(i)) {
        if (j == Grid::kBoundary) continue;
        const double s = alpha * (v[j] - v[i]);
        const double flux = (bernoulli_reference(-s) * rho[i] - bernoulli_reference(s) * rho[j]) / g.h();
        want[static_cast<Eigen::Index>(i)] -= flux / g.h();
      }
    CHECK((sg_flux_divergence(rho, v, alpha, g) - want).cwiseAbs().maxCoeff() <=
          1e-12 * want.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("sg_flux_divergence limits") {
  const Grid g = Grid::unit_square(20);
  Rng rng(4);
  const ScalarField rho = random_smooth_field(g, rng, 1.0).array().exp();
  const ScalarField v = random_smooth_field(g, rng, 2.0);

  SUBCASE("constant potential gives the Neumann Laplacian") {
    CHECK((sg_flux_divergence(rho, g.constant(3.0), 0.8, g) - laplacian_neumann(rho, g)).norm() == 0.0);
  }
  SUBCASE("alpha zero gives the Neumann Laplacian") {
    CHECK((sg_flux_divergence(rho, v, 0.0, g) - laplacian_neumann(rho, g)).norm() == 0.0);
  }
  SUBCASE("Boltzmann equilibrium has zero divergence") {
    for (double alpha : {1.0, -1.0, 0.5}) {
      const ScalarField eq = (alpha * v.array()).exp();
      const double scale = laplacian_neumann(eq, g).cwiseAbs().maxCoeff();
      CHECK(sg_flux_divergence(eq, v, alpha, g).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
  }
  SUBCASE("total flux vanishes") {
    for (double alpha : {1.0, -0.3}) {
      const ScalarField d = sg_flux_divergence(rho, v, alpha, g);
      CHECK(std::abs(integrate_field(d, g)) <= 1e-13 * integrate_field(rho, g));
    }
  }
}

TEST_CASE("integration helpers") {
  const Grid g = Grid::unit_square(10);
  const ScalarField u = g.constant(2.0);
  CHECK(integrate_field(u, g) == doctest::Approx(2.0));
  CHECK(inner(u, u, g) == doctest::Approx(4.0));
  CHECK(l2_norm(u, g) == doctest::Approx(2.0));
  CHECK(max_gradient(g.zeros(), g) == 0.0);
  CHECK(max_gradient(u, g) == doctest::Approx(4.0 / g.h()));
  CHECK_THROWS_AS(integrate_field(ScalarField::Zero(3), g), GridError);
}

TEST_CASE("species density minimum") {
  SpeciesDensity rho;
  rho.species = {ScalarField::Constant(3, 2.0), ScalarField::Constant(3, -1.0)};
  CHECK(rho.min_value() == -1.0);
  CHECK(rho.atoms() == 2);
}
