#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plus/raster.hpp"

namespace plus {

/// Maximal connected set of equal-class cells.
struct Patch {
  int class_id = 0;
  std::vector<std::size_t> cells;  // ascending
  double area_ha = 0.0;
  double perimeter_m = 0.0;
};

/// Patch label per cell (-1 for nodata) and the patch count.
struct PatchLabels {
  std::vector<std::int32_t> label;
  std::size_t count = 0;
};

PatchLabels label_patches(const CategoricalRaster& raster, int connectivity = 8);

/// Patches in order of their first cell (row-major scan).
std::vector<Patch> patchify(const CategoricalRaster& raster, int connectivity = 8);

struct FomResult {
  std::int64_t a = 0;  // observed change simulated as persistence
  std::int64_t b = 0;  // observed change simulated correctly
  std::int64_t c = 0;  // observed change simulated as the wrong class
  std::int64_t d = 0;  // observed persistence simulated as change
  double fom = 0.0;    // 0 when a+b+c+d == 0
};

/// Cells with nodata in any of the three rasters are skipped.
FomResult figure_of_merit(const CategoricalRaster& obs_t0, const CategoricalRaster& obs_t1,
                          const CategoricalRaster& sim_t1);

inline constexpr std::size_t kMetricCount = 15;
extern const std::array<const char*, kMetricCount> kMetricNames;

/// Landscape-level metrics; ENN entries are absent when no class has two patches.
struct MetricsReport {
  std::array<std::optional<double>, kMetricCount> values{};

  std::optional<double> get(const std::string& name) const;
  double np() const { return *values[0]; }
  double lpi() const { return *values[1]; }
  double pladj() const { return *values[14]; }
};

/// Mean, area-weighted mean, median, range, population SD and 100*SD/mean.
std::array<double, 6> distribution_stats(const std::vector<double>& v, const std::vector<double>& weights);

/// Per-patch nearest same-class patch distance (cell centres, metres); absent
/// for patches whose class has a single patch.
std::vector<std::optional<double>> nearest_neighbor_distances(const CategoricalRaster& raster,
                                                              const PatchLabels& labels,
                                                              const std::vector<Patch>& patches);

MetricsReport landscape_metrics(const CategoricalRaster& raster, int connectivity = 8);

struct ComparisonTable {
  std::vector<std::string> candidates;
  struct Row {
    std::string metric;
    std::optional<double> reference;
    std::vector<std::optional<double>> values;
    std::vector<std::optional<double>> distance;  // absent when either side is absent
    std::vector<int> rank;                        // competition ranking; 0 = unranked
    bool tie_for_first = false;
  };
  std::vector<Row> rows;
  std::vector<int> first_closest;  // per candidate, ties credit every tied candidate
};

ComparisonTable compare_reports(const MetricsReport& reference,
                                const std::vector<std::pair<std::string, MetricsReport>>& candidates);

std::string metrics_csv(const MetricsReport& report);
std::string metrics_table_csv(const std::vector<std::pair<std::string, MetricsReport>>& reports);
std::string comparison_csv(const ComparisonTable& table);
std::string fom_csv(const std::vector<std::pair<std::string, FomResult>>& results);

}  // namespace plus
