#include "plus/leas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "plus/errors.hpp"
#include "plus/parallel.hpp"
#include "plus/rng.hpp"
#include "plus/text.hpp"

namespace plus {

namespace {

void require_aligned(const CategoricalRaster& a, const CategoricalRaster& b) {
  const NamedGeometry pair[2] = {{"land use t0", a.geometry}, {"land use t1", b.geometry}};
  assert_aligned(pair);
}

std::string class_label(int id, const std::string& name) {
  return name.empty() ? "class " + std::to_string(id) : "class " + std::to_string(id) + " (" + name + ")";
}

}  // namespace

ExpansionMap extract_expansion(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1, int class_id) {
  require_aligned(lu_t0, lu_t1);
  if (!lu_t0.classes.contains(class_id) && !lu_t1.classes.contains(class_id))
    throw DataError("unknown class " + std::to_string(class_id) + ": not in either legend");
  ExpansionMap out;
  out.class_id = class_id;
  out.geometry = lu_t1.geometry;
  const std::size_t n = lu_t1.cells.size();
  out.mask.assign(n, 0);
  out.valid.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool valid = !lu_t0.is_nodata(i) && !lu_t1.is_nodata(i);
    out.valid[i] = valid;
    out.mask[i] = valid && lu_t1.cells[i] == class_id && lu_t0.cells[i] != class_id;
  }
  return out;
}

SampledTraining build_training(const ExpansionMap& expansion, const FactorStack& factors,
                               const SamplingOptions& options, const std::string& class_name) {
  if (!(options.rate > 0.0 && options.rate <= 1.0))
    throw UsageError("sampling rate must be in (0, 1], got " + format_double(options.rate));
  if (factors.empty()) throw DataError("factor stack is empty");
  const NamedGeometry pair[2] = {{"expansion map", expansion.geometry}, {factors.name(0), factors.geometry()}};
  assert_aligned(pair);
  const std::string who = class_label(expansion.class_id, class_name);

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < expansion.mask.size(); ++i) {
    if (expansion.valid[i] && factors.valid_at(i)) eligible.push_back(i);
  }
  if (eligible.empty()) throw DataError(who + ": zero eligible cells for sampling");

  const auto count = static_cast<std::size_t>(std::llround(options.rate * static_cast<double>(eligible.size())));
  if (count == 0) throw DataError(who + ": sampling rate selects zero cells");
  Rng rng(options.seed);
  // partial Fisher-Yates: the first `count` slots become the sample
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<std::size_t> cells(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(cells.begin(), cells.end());

  std::size_t ones = 0;
  for (auto c : cells) ones += expansion.mask[c];
  if (ones == 0 || ones == cells.size()) {
    throw DataError(who + ": sample contains only label " + std::to_string(ones ? 1 : 0) + " (untrainable)");
  }
  if (options.balanced) {
    const std::uint8_t majority = 2 * ones > cells.size() ? 1 : 0;
    const std::size_t minority_count = majority ? cells.size() - ones : ones;
    std::vector<std::size_t> major, minor;
    for (auto c : cells) (expansion.mask[c] == majority ? major : minor).push_back(c);
    rng.shuffle(std::span<std::size_t>(major));
    major.resize(minority_count);
    cells = std::move(minor);
    cells.insert(cells.end(), major.begin(), major.end());
    std::sort(cells.begin(), cells.end());
  }

  SampledTraining out;
  out.cells = std::move(cells);
  auto& data = out.data;
  data.feature_names = factors.names();
  const std::size_t f = factors.size();
  data.features.resize(out.cells.size() * f);
  data.labels.resize(out.cells.size());
  for (std::size_t r = 0; r < out.cells.size(); ++r) {
    const std::size_t c = out.cells[r];
    for (std::size_t j = 0; j < f; ++j) data.features[r * f + j] = factors.layer(j).values[c];
    data.labels[r] = expansion.mask[c];
  }
  return out;
}

const GrowthSurface* GrowthSurfaceSet::find(int class_id) const {
  for (const auto& s : surfaces) {
    if (s.class_id == class_id) return &s;
  }
  return nullptr;
}

ContinuousRaster evaluate_surface(const Forest& forest, const FactorStack& factors,
                                  const CategoricalRaster& reference, int threads) {
  const auto& g = reference.geometry;
  ContinuousRaster out;
  out.geometry = g;
  out.values.assign(g.cell_count(), 0.0);
  const std::size_t f = factors.size();
  if (f != forest.feature_count()) throw DataError("factor stack does not match the forest's features");
  const double m = static_cast<double>(forest.trees.size());
  const auto width = static_cast<std::size_t>(g.width);
  parallel_for(static_cast<std::size_t>(g.height), threads, 8, [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> x(f);
    for (std::size_t i = row_begin * width; i < row_end * width; ++i) {
      if (reference.is_nodata(i)) {
        out.values[i] = out.nodata;
        continue;
      }
      if (!factors.valid_at(i)) continue;
      for (std::size_t j = 0; j < f; ++j) x[j] = factors.layer(j).values[i];
      out.values[i] = static_cast<double>(count_votes(forest, x)) / m;
    }
  });
  return out;
}

GrowthSurfaceSet mine_growth_surfaces(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1,
                                      const FactorStack& factors, const std::vector<int>& classes,
                                      const MiningOptions& options, MiningReport* report) {
  require_aligned(lu_t0, lu_t1);
  if (factors.empty()) throw DataError("factor stack is empty");
  const NamedGeometry pair[2] = {{"land use t1", lu_t1.geometry}, {factors.name(0), factors.geometry()}};
  assert_aligned(pair);
  for (int k : classes) {
    if (!lu_t1.classes.contains(k) && !lu_t0.classes.contains(k))
      throw DataError("class " + std::to_string(k) + " is not in the land-use legend");
  }

  GrowthSurfaceSet set;
  set.factor_names = factors.names();
  set.surfaces.resize(classes.size());
  std::vector<int> trained(classes.size(), 0);
  // Classes run one after another; each stage inside is parallel and seeded by
  // (master, stage, class), so the result is scheduling-independent.
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const int k = classes[ci];
    const auto name_it = lu_t1.classes.find(k);
    const std::string name = name_it != lu_t1.classes.end() ? name_it->second : std::string{};
    GrowthSurface& s = set.surfaces[ci];
    s.class_id = k;
    s.raw_importance.assign(factors.size(), 0.0);
    s.normalized_importance.assign(factors.size(), 0.0);
    try {
      const ExpansionMap expansion = extract_expansion(lu_t0, lu_t1, k);
      SamplingOptions sampling = options.sampling;
      sampling.seed = derive_seed(options.master_seed, "sample", static_cast<std::uint64_t>(k));
      const SampledTraining training = build_training(expansion, factors, sampling, name);
      ForestParams fp = options.forest;
      fp.seed = derive_seed(options.master_seed, "forest", static_cast<std::uint64_t>(k));
      fp.threads = options.threads;
      const Forest forest = fit_forest(training.data, fp);
      trained[ci] = 1;
      const Importance imp = variable_importance(forest, training.data, options.threads);
      s.raw_importance = imp.raw;
      s.normalized_importance = imp.normalized;
      s.probability = evaluate_surface(forest, factors, lu_t1, options.threads);
      s.trained = true;
    } catch (const DataError& e) {
      s.warning = e.what();
      s.probability.geometry = lu_t1.geometry;
      s.probability.values.assign(lu_t1.geometry.cell_count(), 0.0);
      for (std::size_t i = 0; i < lu_t1.cells.size(); ++i) {
        if (lu_t1.is_nodata(i)) s.probability.values[i] = s.probability.nodata;
      }
    }
  }
  if (report) {
    report->forests_trained = std::accumulate(trained.begin(), trained.end(), 0);
    for (const auto& s : set.surfaces) {
      if (!s.warning.empty()) report->warnings.push_back(s.warning);
    }
  }
  return set;
}

std::filesystem::path growth_surface_path(const std::filesystem::path& dir, int class_id) {
  return dir / ("growth_k" + std::to_string(class_id) + ".asc");
}

std::string importance_csv(const GrowthSurfaceSet& set) {
  std::string csv = "class,factor,raw_importance,normalized_share\n";
  for (const auto& s : set.surfaces) {
    for (std::size_t j = 0; j < set.factor_names.size(); ++j) {
      csv += std::to_string(s.class_id) + "," + set.factor_names[j] + "," + format_double(s.raw_importance[j]) +
             "," + format_double(s.normalized_importance[j]) + "\n";
    }
  }
  return csv;
}

void save_growth_surfaces(const GrowthSurfaceSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : set.surfaces) save_ascii_grid(s.probability, growth_surface_path(dir, s.class_id));
  std::ofstream out(dir / "importance.csv", std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "importance.csv").string());
  out << importance_csv(set);
}

GrowthSurfaceSet load_growth_surfaces(const std::filesystem::path& dir, const std::vector<int>& classes) {
  GrowthSurfaceSet set;
  for (int k : classes) {
    const auto path = growth_surface_path(dir, k);
    if (!std::filesystem::exists(path))
      throw DataError("missing growth surface for class " + std::to_string(k) + ": " + path.string());
    GrowthSurface s;
    s.class_id = k;
    s.probability = load_continuous(path);
    for (double v : s.probability.values) {
      if (v != s.probability.nodata && (v < 0.0 || v > 1.0))
        throw DataError("growth probability outside [0,1] in " + path.string());
    }
    s.trained = true;
    set.surfaces.push_back(std::move(s));
  }
  return set;
}

}  // namespace plus
