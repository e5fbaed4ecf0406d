#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "plus/forest.hpp"
#include "plus/raster.hpp"

namespace plus {

/// Cells where class k appeared between two dates, whatever the source class.
struct ExpansionMap {
  int class_id = 0;
  GridGeometry geometry;
  std::vector<std::uint8_t> mask;   // 1 = expansion of class_id
  std::vector<std::uint8_t> valid;  // 1 = both dates carry data
};

ExpansionMap extract_expansion(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1, int class_id);

struct SamplingOptions {
  double rate = 0.05;
  bool balanced = false;  // downsample the majority label to the minority count
  std::uint64_t seed = 0;
};

struct SampledTraining {
  TrainingSet data;
  std::vector<std::size_t> cells;  // raster cell index of each row, ascending
};

/// Uniform sample without replacement of round(rate x eligible) cells, where
/// eligible cells carry data in both dates and every factor layer.
SampledTraining build_training(const ExpansionMap& expansion, const FactorStack& factors,
                               const SamplingOptions& options, const std::string& class_name = {});

/// Growth probability surface and driver importance for one class.
struct GrowthSurface {
  int class_id = 0;
  ContinuousRaster probability;
  std::vector<double> raw_importance;
  std::vector<double> normalized_importance;
  bool trained = false;
  std::string warning;
};

struct GrowthSurfaceSet {
  std::vector<std::string> factor_names;
  std::vector<GrowthSurface> surfaces;  // in the order classes were requested

  const GrowthSurface* find(int class_id) const;
};

struct MiningOptions {
  ForestParams forest;      // forest.seed is ignored; per-class seeds are derived
  SamplingOptions sampling; // sampling.seed is ignored; per-class seeds are derived
  std::uint64_t master_seed = 0;
  int threads = 0;
};

struct MiningReport {
  int forests_trained = 0;
  std::vector<std::string> warnings;
};

/// One forest per requested class (LEAS merges all source classes). Classes
/// that cannot be trained get an all-zero surface and a warning.
GrowthSurfaceSet mine_growth_surfaces(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1,
                                      const FactorStack& factors, const std::vector<int>& classes,
                                      const MiningOptions& options, MiningReport* report = nullptr);

/// Evaluates a forest over the raster; P = 0 where a factor has no data and
/// nodata where `reference` has no data.
ContinuousRaster evaluate_surface(const Forest& forest, const FactorStack& factors,
                                  const CategoricalRaster& reference, int threads);

std::filesystem::path growth_surface_path(const std::filesystem::path& dir, int class_id);

/// Writes growth_k<id>.asc per class and importance.csv
/// (class,factor,raw_importance,normalized_share).
void save_growth_surfaces(const GrowthSurfaceSet& set, const std::filesystem::path& dir);

/// Reads growth_k<id>.asc for each class; importance is not reloaded.
GrowthSurfaceSet load_growth_surfaces(const std::filesystem::path& dir, const std::vector<int>& classes);

std::string importance_csv(const GrowthSurfaceSet& set);

}  // namespace plus
