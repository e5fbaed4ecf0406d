#pragma once

#include <cstdint>
#include <filesystem>

#include "plus/raster.hpp"

namespace plus::synth {

/// Toy landscape with a planted expansion rule: class 2 (urban) appears at t1
/// on every cell whose road distance is below `dist_threshold`. Class 1 is
/// cropland, class 3 water. Factors: dist (integer cells), slope (smooth), noise.
struct WorldOptions {
  int size = 200;
  std::uint64_t seed = 1;
  double cell_size = 30.0;
  int dist_threshold = 10;
};

struct World {
  CategoricalRaster t0;
  CategoricalRaster t1;
  FactorStack factors;
};

World make_world(const WorldOptions& options);

/// Writes lu_t0.asc, lu_t1.asc and <factor>.asc into dir.
void save_world(const World& world, const std::filesystem::path& dir);

}  // namespace plus::synth
