#include "mschemo/field_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <vector>

namespace mschemo {

static_assert(std::endian::native == std::endian::little,
              "field snapshots are written in native little-endian order");

namespace {

constexpr std::array<char, 4> kMagic{'M', 'S', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FieldIoError("truncated field snapshot header");
  return value;
}

std::array<double, 3> geometry_params(const Grid& grid) {
  if (grid.kind() == GeometryKind::disk)
    return {grid.radius(), grid.center().x, grid.center().y};
  return {grid.length_x(), grid.length_y(), 0.0};
}

}  // namespace

void write_field_binary(const std::filesystem::path& path, const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "write_field_binary");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FieldIoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::int32_t>(out, grid.nx());
  put<std::int32_t>(out, grid.ny());
  put<double>(out, grid.h());
  put<std::uint32_t>(out, grid.kind() == GeometryKind::disk ? 1u : 0u);
  for (double p : geometry_params(grid)) put<double>(out, p);
  std::vector<double> box(static_cast<std::size_t>(grid.nx()) * grid.ny(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto [i, j] = grid.box_cell(k);
    box[static_cast<std::size_t>(j) * grid.nx() + i] = u[static_cast<Eigen::Index>(k)];
  }
  out.write(reinterpret_cast<const char*>(box.data()),
            static_cast<std::streamsize>(box.size() * sizeof(double)));
  if (!out) throw FieldIoError("write failed for " + path.string());
}

ScalarField read_field_binary(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FieldIoError("cannot open field file " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FieldIoError(path.string() + ": not a field snapshot");
  if (get<std::uint32_t>(in) != kVersion) throw FieldIoError(path.string() + ": unsupported version");
  const auto nx = get<std::int32_t>(in);
  const auto ny = get<std::int32_t>(in);
  const auto h = get<double>(in);
  const auto kind = get<std::uint32_t>(in);
  std::array<double, 3> params{};
  for (auto& p : params) p = get<double>(in);
  const bool disk = grid.kind() == GeometryKind::disk;
  if (nx != grid.nx() || ny != grid.ny() || std::abs(h - grid.h()) > 1e-12 * grid.h() ||
      kind != (disk ? 1u : 0u) || params != geometry_params(grid))
    throw FieldIoError(path.string() + ": snapshot mesh does not match the configured grid");
  std::vector<double> box(static_cast<std::size_t>(nx) * ny);
  in.read(reinterpret_cast<char*>(box.data()),
          static_cast<std::streamsize>(box.size() * sizeof(double)));
  if (!in) throw FieldIoError(path.string() + ": truncated field data");
  ScalarField u(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto [i, j] = grid.box_cell(k);
    u[static_cast<Eigen::Index>(k)] = box[static_cast<std::size_t>(j) * nx + i];
  }
  return u;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& u, const Grid& grid) {
  require_conforming(u, grid, "write_field_csv");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FieldIoError("cannot open " + path.string() + " for writing");
  out << "x,y,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point p = grid.position(k);
    out << p.x << ',' << p.y << ',' << u[static_cast<Eigen::Index>(k)] << '\n';
  }
}

}  // namespace mschemo
