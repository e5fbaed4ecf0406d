#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace plus {

/// Shape and placement of a north-up grid. Cells are addressed row-major,
/// row 0 being the northernmost row.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;
  double xll = 0.0;
  double yll = 0.0;

  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool same_shape(const GridGeometry& o) const noexcept {
    return width == o.width && height == o.height && cell_size == o.cell_size;
  }
  /// Hectares covered by one cell.
  double cell_hectares() const noexcept { return cell_size * cell_size / 1.0e4; }
};

using Legend = std::map<int, std::string>;

inline constexpr int kDefaultCategoricalNodata = -9999;
inline constexpr double kDefaultContinuousNodata = -9999.0;

/// Land-use class grid.
struct CategoricalRaster {
  GridGeometry geometry;
  Legend classes;
  std::vector<std::int32_t> cells;
  std::int32_t nodata = kDefaultCategoricalNodata;

  bool is_nodata(std::size_t i) const noexcept { return cells[i] == nodata; }
  std::int32_t at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * geometry.width + col];
  }

  /// Throws DataError when an invariant is broken.
  void validate() const;
};

/// Real-valued grid (driving factor, growth probability).
struct ContinuousRaster {
  GridGeometry geometry;
  std::vector<double> values;
  double nodata = kDefaultContinuousNodata;

  bool is_nodata(std::size_t i) const noexcept { return values[i] == nodata; }
  void validate() const;
};

/// Aligned stack of named driving-factor layers.
class FactorStack {
public:
  FactorStack() = default;

  /// Appends a layer; throws DataError on duplicate names or misalignment.
  void add(std::string name, ContinuousRaster layer);

  std::size_t size() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }
  const std::string& name(std::size_t i) const { return layers_[i].first; }
  const ContinuousRaster& layer(std::size_t i) const { return layers_[i].second; }
  std::vector<std::string> names() const;
  const GridGeometry& geometry() const { return layers_.front().second.geometry; }

  /// True when every layer has data at cell i.
  bool valid_at(std::size_t i) const noexcept;

private:
  std::vector<std::pair<std::string, ContinuousRaster>> layers_;
};

/// Raw contents of a grid file prior to typing.
struct GridFile {
  GridGeometry geometry;
  double nodata = kDefaultContinuousNodata;
  std::vector<double> values;
};

/// Parses an ESRI ASCII grid, or the packed binary grid when the file starts
/// with the binary magic.
GridFile read_grid_file(const std::filesystem::path& path);

using AnyRaster = std::variant<CategoricalRaster, ContinuousRaster>;

/// Loads a grid; integral-valued files with a legend sidecar or integral
/// nodata are returned as categorical, everything else as continuous.
AnyRaster load_ascii_grid(const std::filesystem::path& path);

/// Loads a categorical grid. The legend comes from `<path>.legend.csv` when
/// present, otherwise it is inferred from the ids in the file.
CategoricalRaster load_categorical(const std::filesystem::path& path);
ContinuousRaster load_continuous(const std::filesystem::path& path);

void save_ascii_grid(const CategoricalRaster& raster, const std::filesystem::path& path);
void save_ascii_grid(const ContinuousRaster& raster, const std::filesystem::path& path);

/// Packed little-endian binary grid. Layout:
///   "PLUSGRID" | u8 version(=1) | u8 kind (0 categorical i32, 1 continuous f64)
///   | u16 reserved | u32 width | u32 height | f64 cell_size | f64 xll | f64 yll
///   | f64 nodata | [categorical: u32 legend count, {i32 id, u32 len, bytes}*]
///   | payload row-major
void save_binary_grid(const CategoricalRaster& raster, const std::filesystem::path& path);
void save_binary_grid(const ContinuousRaster& raster, const std::filesystem::path& path);

/// Legend sidecar path for a categorical grid file.
std::filesystem::path legend_path(const std::filesystem::path& grid_path);

/// A raster geometry tagged with the name used in error messages.
struct NamedGeometry {
  std::string name;
  GridGeometry geometry;
};

/// Throws DataError naming the first layer whose width, height or cell size
/// differs from the first entry.
void assert_aligned(std::span<const NamedGeometry> rasters);

/// Cell count per class id, excluding nodata. Classes of the legend with no
/// cells are reported with 0.
std::map<int, std::int64_t> class_areas(const CategoricalRaster& raster);

std::size_t valid_cell_count(const CategoricalRaster& raster);

}  // namespace plus
