#pragma once

#include <filesystem>
#include <stdexcept>

#include "mschemo/grid.hpp"

namespace mschemo {

class FieldIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary field snapshot, little-endian:
//   char[4]  magic "MSCF"
//   uint32   format version (1)
//   int32    nx, ny
//   float64  h
//   uint32   geometry (0 = rectangle, 1 = disk)
//   float64  p0, p1, p2   rectangle: Lx, Ly, 0    disk: R, center x, center y
//   float64  nx*ny values, row-major (row j = y index), exterior cells 0.0
void write_field_binary(const std::filesystem::path& path, const ScalarField& u, const Grid& grid);

/// Reads a snapshot; throws FieldIoError when the header does not describe `grid`.
ScalarField read_field_binary(const std::filesystem::path& path, const Grid& grid);

/// CSV with header "x,y,value", one row per interior cell.
void write_field_csv(const std::filesystem::path& path, const ScalarField& u, const Grid& grid);

}  // namespace mschemo
