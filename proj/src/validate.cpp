#include "plus/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "plus/errors.hpp"
#include "plus/text.hpp"

namespace plus {

const std::array<const char*, kMetricCount> kMetricNames = {
    "NP",     "LPI",    "PARA_MN", "PARA_AM", "PARA_MD", "PARA_RA", "PARA_SD", "PARA_CV",
    "ENN_MN", "ENN_AM", "ENN_MD",  "ENN_RA",  "ENN_SD",  "ENN_CV",  "PLADJ"};

std::optional<double> MetricsReport::get(const std::string& name) const {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (name == kMetricNames[i]) return values[i];
  }
  throw UsageError("unknown metric '" + name + "'");
}

PatchLabels label_patches(const CategoricalRaster& raster, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw UsageError("connectivity must be 4 or 8");
  const int w = raster.geometry.width, h = raster.geometry.height;
  PatchLabels out;
  out.label.assign(raster.cells.size(), -1);
  std::vector<std::size_t> stack;
  static constexpr int dr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int dc[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  for (std::size_t start = 0; start < raster.cells.size(); ++start) {
    if (raster.is_nodata(start) || out.label[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(out.count++);
    const std::int32_t cls = raster.cells[start];
    out.label[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(i / w), c = static_cast<int>(i % w);
      for (int k = 0; k < connectivity; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
        if (out.label[j] >= 0 || raster.cells[j] != cls) continue;
        out.label[j] = id;
        stack.push_back(j);
      }
    }
  }
  return out;
}

namespace {

std::vector<Patch> patches_from_labels(const CategoricalRaster& raster, const PatchLabels& labels) {
  const int w = raster.geometry.width, h = raster.geometry.height;
  const double cs = raster.geometry.cell_size;
  std::vector<Patch> patches(labels.count);
  std::vector<std::int64_t> edges(labels.count, 0);
  for (std::size_t i = 0; i < raster.cells.size(); ++i) {
    const std::int32_t l = labels.label[i];
    if (l < 0) continue;
    auto& p = patches[static_cast<std::size_t>(l)];
    if (p.cells.empty()) p.class_id = raster.cells[i];
    p.cells.push_back(i);
    const int r = static_cast<int>(i / w), c = static_cast<int>(i % w);
    const auto unlike = [&](int rr, int cc) {
      if (rr < 0 || rr >= h || cc < 0 || cc >= w) return true;
      return raster.cells[static_cast<std::size_t>(rr) * w + cc] != raster.cells[i];
    };
    edges[static_cast<std::size_t>(l)] += unlike(r - 1, c) + unlike(r + 1, c) + unlike(r, c - 1) + unlike(r, c + 1);
  }
  const double cell_ha = raster.geometry.cell_hectares();
  for (std::size_t k = 0; k < patches.size(); ++k) {
    patches[k].area_ha = static_cast<double>(patches[k].cells.size()) * cell_ha;
    patches[k].perimeter_m = static_cast<double>(edges[k]) * cs;
  }
  return patches;
}

}  // namespace

std::vector<Patch> patchify(const CategoricalRaster& raster, int connectivity) {
  return patches_from_labels(raster, label_patches(raster, connectivity));
}

FomResult figure_of_merit(const CategoricalRaster& obs_t0, const CategoricalRaster& obs_t1,
                          const CategoricalRaster& sim_t1) {
  const NamedGeometry g[3] = {{"observed t0", obs_t0.geometry},
                              {"observed t1", obs_t1.geometry},
                              {"simulated t1", sim_t1.geometry}};
  assert_aligned(g);
  FomResult r;
  for (std::size_t i = 0; i < obs_t0.cells.size(); ++i) {
    if (obs_t0.is_nodata(i) || obs_t1.is_nodata(i) || sim_t1.is_nodata(i)) continue;
    const auto o0 = obs_t0.cells[i], o1 = obs_t1.cells[i], s1 = sim_t1.cells[i];
    if (o0 != o1) {
      if (s1 == o0) ++r.a;
      else if (s1 == o1) ++r.b;
      else ++r.c;
    } else if (s1 != o0) {
      ++r.d;
    }
  }
  const std::int64_t denom = r.a + r.b + r.c + r.d;
  r.fom = denom == 0 ? 0.0 : static_cast<double>(r.b) / static_cast<double>(denom);
  return r;
}

std::array<double, 6> distribution_stats(const std::vector<double>& v, const std::vector<double>& weights) {
  if (v.empty()) throw UsageError("statistics of an empty sample");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double wsum = 0.0, wv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    wsum += weights[i];
    wv += weights[i] * v[i];
  }
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size() / 2;
  const double median = s.size() % 2 ? s[m] : 0.5 * (s[m - 1] + s[m]);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, wsum > 0 ? wv / wsum : mean, median, s.back() - s.front(), sd, mean != 0 ? 100.0 * sd / mean : 0.0};
}

std::vector<std::optional<double>> nearest_neighbor_distances(const CategoricalRaster& raster,
                                                              const PatchLabels& labels,
                                                              const std::vector<Patch>& patches) {
  const int w = raster.geometry.width, h = raster.geometry.height;
  std::map<int, std::size_t> patches_per_class;
  for (const auto& p : patches) ++patches_per_class[p.class_id];

  // Only cells with a 4-neighbour outside their patch can realise the
  // minimum distance between two patches.
  constexpr int kBucket = 16;
  const int bw = (w + kBucket - 1) / kBucket, bh = (h + kBucket - 1) / kBucket;
  struct Cell {
    int r, c;
    std::int32_t label;
  };
  std::map<int, std::vector<std::vector<Cell>>> buckets;
  std::vector<std::vector<Cell>> border(patches.size());
  for (std::size_t i = 0; i < raster.cells.size(); ++i) {
    const std::int32_t l = labels.label[i];
    if (l < 0) continue;
    const int cls = raster.cells[i];
    if (patches_per_class[cls] < 2) continue;
    const int r = static_cast<int>(i / w), c = static_cast<int>(i % w);
    const auto outside = [&](int rr, int cc) {
      return rr < 0 || rr >= h || cc < 0 || cc >= w || labels.label[static_cast<std::size_t>(rr) * w + cc] != l;
    };
    if (!(outside(r - 1, c) || outside(r + 1, c) || outside(r, c - 1) || outside(r, c + 1))) continue;
    auto& grid = buckets[cls];
    if (grid.empty()) grid.resize(static_cast<std::size_t>(bw) * bh);
    grid[static_cast<std::size_t>(r / kBucket) * bw + c / kBucket].push_back({r, c, l});
    border[static_cast<std::size_t>(l)].push_back({r, c, l});
  }

  std::vector<std::optional<double>> out(patches.size());
  for (std::size_t p = 0; p < patches.size(); ++p) {
    if (patches_per_class[patches[p].class_id] < 2) continue;
    const auto& grid = buckets.at(patches[p].class_id);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const Cell& a : border[p]) {
      const int br = a.r / kBucket, bc = a.c / kBucket;
      const int max_ring = std::max({br, bh - 1 - br, bc, bw - 1 - bc});
      for (int ring = 0; ring <= max_ring; ++ring) {
        const std::int64_t lb = ring == 0 ? 0 : static_cast<std::int64_t>(ring - 1) * kBucket + 1;
        if (lb * lb >= best) break;
        for (int rr = br - ring; rr <= br + ring; ++rr) {
          if (rr < 0 || rr >= bh) continue;
          const bool edge_row = rr == br - ring || rr == br + ring;
          for (int cc = bc - ring; cc <= bc + ring; cc += edge_row ? 1 : 2 * ring) {
            if (cc >= 0 && cc < bw) {
              for (const Cell& b : grid[static_cast<std::size_t>(rr) * bw + cc]) {
                if (b.label == a.label) continue;
                const std::int64_t dy = b.r - a.r, dx = b.c - a.c;
                best = std::min(best, dy * dy + dx * dx);
              }
            }
            if (ring == 0) break;
          }
        }
      }
    }
    out[p] = std::sqrt(static_cast<double>(best)) * raster.geometry.cell_size;
  }
  return out;
}

MetricsReport landscape_metrics(const CategoricalRaster& raster, int connectivity) {
  const PatchLabels labels = label_patches(raster, connectivity);
  if (labels.count == 0) throw DataError("landscape metrics need at least one valid cell");
  const std::vector<Patch> patches = patches_from_labels(raster, labels);
  MetricsReport rep;
  std::size_t total_cells = 0, largest = 0;
  std::vector<double> para, area;
  for (const auto& p : patches) {
    total_cells += p.cells.size();
    largest = std::max(largest, p.cells.size());
    para.push_back(p.perimeter_m / p.area_ha);
    area.push_back(p.area_ha);
  }
  rep.values[0] = static_cast<double>(patches.size());
  rep.values[1] = 100.0 * static_cast<double>(largest) / static_cast<double>(total_cells);
  const auto ps = distribution_stats(para, area);
  for (int i = 0; i < 6; ++i) rep.values[2 + i] = ps[i];

  const auto enn = nearest_neighbor_distances(raster, labels, patches);
  std::vector<double> ev, ew;
  for (std::size_t p = 0; p < patches.size(); ++p) {
    if (!enn[p]) continue;
    ev.push_back(*enn[p]);
    ew.push_back(patches[p].area_ha);
  }
  if (!ev.empty()) {
    const auto es = distribution_stats(ev, ew);
    for (int i = 0; i < 6; ++i) rep.values[8 + i] = es[i];
  }

  const int w = raster.geometry.width, h = raster.geometry.height;
  std::int64_t like = 0, all = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (raster.is_nodata(i)) continue;
      if (c + 1 < w && !raster.is_nodata(i + 1)) {
        ++all;
        like += raster.cells[i + 1] == raster.cells[i];
      }
      if (r + 1 < h && !raster.is_nodata(i + w)) {
        ++all;
        like += raster.cells[i + w] == raster.cells[i];
      }
    }
  }
  rep.values[14] = all == 0 ? 0.0 : 100.0 * static_cast<double>(like) / static_cast<double>(all);
  return rep;
}

ComparisonTable compare_reports(const MetricsReport& reference,
                                const std::vector<std::pair<std::string, MetricsReport>>& candidates) {
  if (candidates.empty()) throw UsageError("comparison needs at least one candidate");
  ComparisonTable t;
  const std::size_t n = candidates.size();
  for (const auto& [name, rep] : candidates) t.candidates.push_back(name);
  t.first_closest.assign(n, 0);
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    ComparisonTable::Row row;
    row.metric = kMetricNames[m];
    row.reference = reference.values[m];
    row.distance.resize(n);
    row.rank.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      row.values.push_back(candidates[k].second.values[m]);
      if (row.reference && row.values[k]) row.distance[k] = std::fabs(*row.values[k] - *row.reference);
    }
    if (row.reference) {
      const double eps = 1e-12 * std::max(1.0, std::fabs(*row.reference));
      for (std::size_t k = 0; k < n; ++k) {
        if (!row.distance[k]) continue;
        int better = 0;
        for (std::size_t o = 0; o < n; ++o) {
          if (row.distance[o] && *row.distance[o] < *row.distance[k] - eps) ++better;
        }
        row.rank[k] = better + 1;
      }
      // candidates lacking the metric rank after every present one
      const int present = static_cast<int>(std::count_if(row.distance.begin(), row.distance.end(),
                                                         [](const auto& d) { return d.has_value(); }));
      for (std::size_t k = 0; k < n; ++k) {
        if (!row.distance[k]) row.rank[k] = present + 1;
      }
      int firsts = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (row.rank[k] == 1 && row.distance[k]) {
          ++firsts;
          ++t.first_closest[k];
        }
      }
      row.tie_for_first = firsts > 1;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "metric,value\n";
  for (std::size_t m = 0; m < kMetricCount; ++m) out << kMetricNames[m] << ',' << opt_str(report.values[m]) << '\n';
  return out.str();
}

std::string metrics_table_csv(const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ostringstream out;
  out << "metric";
  for (const auto& [name, r] : reports) out << ',' << name;
  out << '\n';
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    out << kMetricNames[m];
    for (const auto& [name, r] : reports) out << ',' << opt_str(r.values[m]);
    out << '\n';
  }
  return out.str();
}

std::string comparison_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "metric,reference";
  for (const auto& c : table.candidates) out << ',' << c << ',' << c << "_distance," << c << "_rank";
  out << ",tie_for_first\n";
  for (const auto& row : table.rows) {
    out << row.metric << ',' << opt_str(row.reference);
    for (std::size_t k = 0; k < table.candidates.size(); ++k) {
      out << ',' << opt_str(row.values[k]) << ',' << opt_str(row.distance[k]) << ',';
      if (row.rank[k] > 0) out << row.rank[k];
      else out << "NA";
    }
    out << ',' << (row.tie_for_first ? "yes" : "no") << '\n';
  }
  out << "first_closest,";
  for (std::size_t k = 0; k < table.candidates.size(); ++k) out << ",,," << table.first_closest[k];
  out << ",\n";
  return out.str();
}

std::string fom_csv(const std::vector<std::pair<std::string, FomResult>>& results) {
  std::ostringstream out;
  out << "simulation,A,B,C,D,FOM\n";
  for (const auto& [name, r] : results)
    out << name << ',' << r.a << ',' << r.b << ',' << r.c << ',' << r.d << ',' << format_double(r.fom) << '\n';
  return out.str();
}

}  // namespace plus
