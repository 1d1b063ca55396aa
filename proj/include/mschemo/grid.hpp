#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mschemo {

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GeometryKind { rectangle, disk };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// One real value per interior cell, in the grid's interior ordering.
using ScalarField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Cell-centered uniform mesh of a rectangle [0,Lx]x[0,Ly] or of a disk
/// (realized by masking its bounding box). Interior cells are numbered
/// row by row (j outer, i inner). Faces toward exterior cells or off the box
/// are boundary faces: Dirichlet for potentials, zero flux for densities.
class Grid {
 public:
  static constexpr int kBoundary = -1;
  enum Face { west = 0, east = 1, south = 2, north = 3 };

  /// Rectangle with nx cells along x; ny = Ly / h must be an integer.
  static Grid rectangle(double lx, double ly, int nx);
  static Grid unit_square(int n) { return rectangle(1.0, 1.0, n); }
  /// Disk of the given radius meshed with n cells across the diameter; a cell
  /// is interior iff its center lies strictly inside the disk.
  static Grid disk(double radius, int n, Point center = {});

  [[nodiscard]] GeometryKind kind() const { return kind_; }
  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] double cell_area() const { return h_ * h_; }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  /// Discrete area of the domain: interior cell count times h^2.
  [[nodiscard]] double area() const { return static_cast<double>(size()) * cell_area(); }

  [[nodiscard]] double length_x() const { return lx_; }
  [[nodiscard]] double length_y() const { return ly_; }
  [[nodiscard]] double radius() const { return radius_; }
  /// Geometric center (disk center, or rectangle midpoint).
  [[nodiscard]] Point center() const { return center_; }

  /// Interior index of box cell (i, j), or kBoundary.
  [[nodiscard]] int index(int i, int j) const;
  [[nodiscard]] std::array<int, 2> box_cell(std::size_t k) const { return cells_[k]; }
  [[nodiscard]] Point position(std::size_t k) const;
  [[nodiscard]] Point box_position(int i, int j) const;
  /// Interior neighbors in Face order; kBoundary marks a boundary face.
  [[nodiscard]] const std::array<int, 4>& neighbors(std::size_t k) const { return neighbors_[k]; }
  [[nodiscard]] std::size_t boundary_face_count(std::size_t k) const;
  /// Interior cell whose center is closest to p.
  [[nodiscard]] std::size_t nearest_cell(Point p) const;
  /// Euclidean distance from p to the exact boundary of the geometry.
  [[nodiscard]] double distance_to_boundary(Point p) const;

  [[nodiscard]] ScalarField zeros() const { return ScalarField::Zero(static_cast<Eigen::Index>(size())); }
  [[nodiscard]] ScalarField constant(double c) const { return ScalarField::Constant(static_cast<Eigen::Index>(size()), c); }

  bool operator==(const Grid& other) const;

 private:
  Grid() = default;
  void build(const std::vector<char>& mask);

  GeometryKind kind_ = GeometryKind::rectangle;
  int nx_ = 0;
  int ny_ = 0;
  double h_ = 0.0;
  double lx_ = 0.0;
  double ly_ = 0.0;
  double radius_ = 0.0;
  Point origin_;  // lower-left corner of the bounding box
  Point center_;
  std::vector<int> box_to_interior_;
  std::vector<std::array<int, 2>> cells_;
  std::vector<std::array<int, 4>> neighbors_;
};

/// Family of per-atom densities rho_alpha, one field per measure atom.
struct SpeciesDensity {
  std::vector<ScalarField> species;

  [[nodiscard]] std::size_t atoms() const { return species.size(); }
  [[nodiscard]] const ScalarField& operator[](std::size_t j) const { return species[j]; }
  [[nodiscard]] ScalarField& operator[](std::size_t j) { return species[j]; }
  [[nodiscard]] double min_value() const;
};

/// Bernoulli function B(s) = s / (e^s - 1), B(0) = 1.
double bernoulli(double s);

/// 5-point Laplacian with the Dirichlet face value zero imposed by the mirror
/// ghost value -u across boundary faces.
ScalarField laplacian_dirichlet(const ScalarField& u, const Grid& grid);

/// -Delta_h as a symmetric positive definite sparse matrix.
SparseMatrix negative_laplacian_matrix(const Grid& grid);

/// Discrete div(grad rho - alpha rho grad v) with Scharfetter-Gummel face
/// fluxes and zero flux on boundary faces.
ScalarField sg_flux_divergence(const ScalarField& rho, const ScalarField& v, double alpha,
                               const Grid& grid);

/// 5-point Laplacian with homogeneous Neumann faces.
ScalarField laplacian_neumann(const ScalarField& u, const Grid& grid);

/// h^2 * sum of the field.
double integrate_field(const ScalarField& u, const Grid& grid);

/// h^2 * sum of u*w.
double inner(const ScalarField& u, const ScalarField& w, const Grid& grid);

/// Discrete L2 norm sqrt(h^2 * sum u^2).
double l2_norm(const ScalarField& u, const Grid& grid);

/// Largest face difference |u_j - u_i| / h, with u = 0 across Dirichlet faces
/// taken at distance h/2.
double max_gradient(const ScalarField& u, const Grid& grid);

void require_conforming(const ScalarField& u, const Grid& grid, const char* what);

}  // namespace mschemo
