#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plus/cars.hpp"
#include "plus/leas.hpp"
#include "plus/raster.hpp"
#include "plus/simplex.hpp"
#include "plus/validate.hpp"

namespace plus::testing {

CategoricalRaster random_raster(int w, int h, int classes, std::uint64_t seed, double nodata_share = 0.0,
                                double cell_size = 30.0);

/// Uniform raster of one class.
CategoricalRaster uniform_raster(int w, int h, int class_id, double cell_size = 30.0);

/// Patches as sorted cell lists, found with a breadth-first flood fill.
std::vector<std::vector<std::size_t>> flood_fill_patches(const CategoricalRaster& r, int connectivity);

FomResult naive_fom(const CategoricalRaster& t0, const CategoricalRaster& t1, const CategoricalRaster& sim);

/// Best objective over all basic feasible points (x >= 0 rows included);
/// nullopt when no vertex is feasible.
std::optional<double> vertex_enumeration_max(const LinearProgram& lp);

/// Random feasible bounded LP with n variables and m constraints (m >= 1).
LinearProgram random_feasible_lp(int n, int m, std::uint64_t seed);

/// Blobby K-class landscape with planted suitability surfaces: class k's
/// surface peaks around its own centre.
struct CaWorld {
  CategoricalRaster initial;
  GrowthSurfaceSet surfaces;
  std::vector<int> classes;
};

CaWorld make_ca_world(int size, int classes, std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

std::string read_bytes(const std::filesystem::path& p);

}  // namespace plus::testing
