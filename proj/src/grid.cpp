#include "mschemo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mschemo {

Grid Grid::rectangle(double lx, double ly, int nx) {
  if (!(lx > 0.0) || !(ly > 0.0) || nx < 1) throw GridError("rectangle needs Lx, Ly > 0 and nx >= 1");
  Grid g;
  g.kind_ = GeometryKind::rectangle;
  g.lx_ = lx;
  g.ly_ = ly;
  g.nx_ = nx;
  g.h_ = lx / nx;
  const double cells_y = ly / g.h_;
  g.ny_ = static_cast<int>(std::lround(cells_y));
  if (g.ny_ < 1 || std::abs(cells_y - g.ny_) > 1e-9 * cells_y)
    throw GridError("rectangle Ly must be an integer multiple of h = Lx/nx");
  g.origin_ = {0.0, 0.0};
  g.center_ = {0.5 * lx, 0.5 * ly};
  g.build(std::vector<char>(static_cast<std::size_t>(g.nx_) * g.ny_, 1));
  return g;
}

Grid Grid::disk(double radius, int n, Point center) {
  if (!(radius > 0.0) || n < 1) throw GridError("disk needs R > 0 and n >= 1");
  Grid g;
  g.kind_ = GeometryKind::disk;
  g.radius_ = radius;
  g.nx_ = g.ny_ = n;
  g.h_ = 2.0 * radius / n;
  g.lx_ = g.ly_ = 2.0 * radius;
  g.origin_ = {center.x - radius, center.y - radius};
  g.center_ = center;
  std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point p = g.box_position(i, j);
      const double dx = p.x - center.x;
      const double dy = p.y - center.y;
      mask[static_cast<std::size_t>(j) * n + i] = (dx * dx + dy * dy < radius * radius) ? 1 : 0;
    }
  }
  g.build(mask);
  if (g.size() == 0) throw GridError("disk mesh has no interior cells");
  return g;
}

void Grid::build(const std::vector<char>& mask) {
  box_to_interior_.assign(mask.size(), kBoundary);
  cells_.clear();
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      const std::size_t b = static_cast<std::size_t>(j) * nx_ + i;
      if (mask[b]) {
        box_to_interior_[b] = static_cast<int>(cells_.size());
        cells_.push_back({i, j});
      }
    }
  }
  neighbors_.resize(cells_.size());
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const auto [i, j] = cells_[k];
    neighbors_[k] = {index(i - 1, j), index(i + 1, j), index(i, j - 1), index(i, j + 1)};
  }
}

int Grid::index(int i, int j) const {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return kBoundary;
  return box_to_interior_[static_cast<std::size_t>(j) * nx_ + i];
}

Point Grid::box_position(int i, int j) const {
  return {origin_.x + (i + 0.5) * h_, origin_.y + (j + 0.5) * h_};
}

Point Grid::position(std::size_t k) const {
  return box_position(cells_[k][0], cells_[k][1]);
}

std::size_t Grid::boundary_face_count(std::size_t k) const {
  return static_cast<std::size_t>(
      std::count(neighbors_[k].begin(), neighbors_[k].end(), kBoundary));
}

std::size_t Grid::nearest_cell(Point p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size(); ++k) {
    const Point q = position(k);
    const double d = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double Grid::distance_to_boundary(Point p) const {
  if (kind_ == GeometryKind::disk) {
    return radius_ - std::hypot(p.x - center_.x, p.y - center_.y);
  }
  return std::min({p.x - origin_.x, origin_.x + lx_ - p.x, p.y - origin_.y, origin_.y + ly_ - p.y});
}

bool Grid::operator==(const Grid& other) const {
  return kind_ == other.kind_ && nx_ == other.nx_ && ny_ == other.ny_ && h_ == other.h_ &&
         lx_ == other.lx_ && ly_ == other.ly_ && radius_ == other.radius_ &&
         center_.x == other.center_.x && center_.y == other.center_.y;
}

double SpeciesDensity::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : species)
    if (s.size() > 0) m = std::min(m, s.minCoeff());
  return m;
}

double bernoulli(double s) {
  if (std::abs(s) < 1e-5) return 1.0 - 0.5 * s + s * s / 12.0;
  return s / std::expm1(s);
}

void require_conforming(const ScalarField& u, const Grid& grid, const char* what) {
  if (static_cast<std::size_t>(u.size()) != grid.size())
    throw GridError(std::string(what) + ": field has " + std::to_string(u.size()) +
                    " entries, grid has " + std::to_string(grid.size()) + " interior cells");
}

ScalarField laplacian_dirichlet(const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "laplacian_dirichlet");
  const double inv_h2 = 1.0 / grid.cell_area();
  ScalarField out(u.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (int nb : grid.neighbors(k)) {
      // mirror ghost -u_k puts the face value at zero
      acc += (nb == Grid::kBoundary ? -u[k] : u[nb]) - u[k];
    }
    out[k] = acc * inv_h2;
  }
  return out;
}

SparseMatrix negative_laplacian_matrix(const Grid& grid) {
  const double inv_h2 = 1.0 / grid.cell_area();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double diag = 0.0;
    for (int nb : grid.neighbors(k)) {
      if (nb == Grid::kBoundary) {
        diag += 2.0 * inv_h2;
      } else {
        diag += inv_h2;
        entries.emplace_back(static_cast<int>(k), nb, -inv_h2);
      }
    }
    entries.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

ScalarField sg_flux_divergence(const ScalarField& rho, const ScalarField& v, double alpha,
                               const Grid& grid) {
  require_conforming(rho, grid, "sg_flux_divergence(rho)");
  require_conforming(v, grid, "sg_flux_divergence(v)");
  const double inv_h2 = 1.0 / grid.cell_area();
  ScalarField out(rho.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (int nb : grid.neighbors(k)) {
      if (nb == Grid::kBoundary) continue;
      const double s = alpha * (v[nb] - v[k]);
      acc += bernoulli(s) * rho[nb] - bernoulli(-s) * rho[k];
    }
    out[k] = acc * inv_h2;
  }
  return out;
}

ScalarField laplacian_neumann(const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "laplacian_neumann");
  const double inv_h2 = 1.0 / grid.cell_area();
  ScalarField out(u.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (int nb : grid.neighbors(k))
      if (nb != Grid::kBoundary) acc += u[nb] - u[k];
    out[k] = acc * inv_h2;
  }
  return out;
}

double integrate_field(const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "integrate_field");
  return grid.cell_area() * u.sum();
}

double inner(const ScalarField& u, const ScalarField& w, const Grid& grid) {
  require_conforming(u, grid, "inner");
  require_conforming(w, grid, "inner");
  return grid.cell_area() * u.dot(w);
}

double l2_norm(const ScalarField& u, const Grid& grid) {
  return std::sqrt(inner(u, u, grid));
}

double max_gradient(const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "max_gradient");
  double m = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int nb : grid.neighbors(k)) {
      const double d = nb == Grid::kBoundary ? 2.0 * std::abs(u[k]) : std::abs(u[nb] - u[k]);
      m = std::max(m, d);
    }
  }
  return m / grid.h();
}

}  // namespace mschemo
