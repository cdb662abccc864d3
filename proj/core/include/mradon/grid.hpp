#pragma once

#include <cstddef>
#include <vector>

#include "mradon/errors.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// Rectangular cell-centered sampling lattice over a bounding box (2D: nz = 1).
struct GridSpec {
  int dim = 2;
  int nx = 0, ny = 0, nz = 1;
  double x0 = 0, y0 = 0, z0 = 0;  // lower corner of the box
  double dx = 0, dy = 0, dz = 0;  // cell sizes

  Vec3 center(int i, int j, int k = 0) const {
    return {x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy,
            dim == 3 ? z0 + (k + 0.5) * dz : 0.0};
  }
  double cell_volume() const { return dim == 3 ? dx * dy * dz : dx * dy; }
  std::size_t count() const {
    return static_cast<std::size_t>(nx) * ny * (dim == 3 ? nz : 1);
  }
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * ny + j) * (dim == 3 ? nz : 1) + k;
  }
};

// Scalar samples on a GridSpec (phantoms, reconstructions, pointwise errors).
struct ScalarGrid {
  GridSpec spec;
  std::vector<double> values;

  ScalarGrid() = default;
  explicit ScalarGrid(const GridSpec& s) : spec(s), values(s.count(), 0.0) {}

  double& at(int i, int j, int k = 0) { return values[spec.index(i, j, k)]; }
  double at(int i, int j, int k = 0) const { return values[spec.index(i, j, k)]; }
};

}  // namespace mradon
