#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "plus/errors.hpp"
#include "plus/validate.hpp"
#include "support.hpp"

using namespace plus;
using plus::testing::random_raster;
using plus::testing::uniform_raster;

namespace {

CategoricalRaster from_rows(const std::vector<std::vector<int>>& rows, double cs = 30.0) {
  CategoricalRaster r;
  r.geometry = {static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), cs, 0, 0};
  for (const auto& row : rows) {
    for (int v : row) {
      r.cells.push_back(v);
      if (v != r.nodata) r.classes[v] = "c" + std::to_string(v);
    }
  }
  return r;
}

CategoricalRaster transpose(const CategoricalRaster& r) {
  CategoricalRaster t = r;
  const int w = r.geometry.width, h = r.geometry.height;
  t.geometry.width = h;
  t.geometry.height = w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t.cells[static_cast<std::size_t>(x) * h + y] = r.cells[static_cast<std::size_t>(y) * w + x];
  return t;
}

CategoricalRaster rotate90(const CategoricalRaster& r) {
  CategoricalRaster t = r;
  const int w = r.geometry.width, h = r.geometry.height;
  t.geometry.width = h;
  t.geometry.height = w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t.cells[static_cast<std::size_t>(x) * h + (h - 1 - y)] = r.cells[static_cast<std::size_t>(y) * w + x];
  return t;
}

}  // namespace

TEST_SUITE("validate") {
  TEST_CASE("patch labelling hand cases") {
    CHECK(patchify(uniform_raster(5, 4, 1)).size() == 1);
    const auto checker = from_rows({{1, 2}, {2, 1}});
    CHECK(patchify(checker, 8).size() == 2);
    CHECK(patchify(checker, 4).size() == 4);
    CHECK_THROWS_AS(patchify(checker, 6), UsageError);
  }

  TEST_CASE("patchify agrees with a flood fill on random grids") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto r = random_raster(50, 50, 3, s, 0.05);
      for (int conn : {4, 8}) {
        auto patches = patchify(r, conn);
        std::vector<std::vector<std::size_t>> cells;
        double area = 0;
        for (auto& p : patches) {
          area += p.area_ha;
          cells.push_back(p.cells);
        }
        std::sort(cells.begin(), cells.end());
        CHECK(cells == plus::testing::flood_fill_patches(r, conn));
        CHECK(area == doctest::Approx(static_cast<double>(valid_cell_count(r)) * 0.09));
      }
    }
  }

  TEST_CASE("perimeter counts unlike, nodata and boundary edges") {
    const int nd = kDefaultCategoricalNodata;
    const auto r = from_rows({{1, 1, 2}, {nd, 1, 2}}, 10.0);
    const auto patches = patchify(r, 8);
    REQUIRE(patches.size() == 2);
    CHECK(patches[0].perimeter_m == 80.0);
    CHECK(patches[1].perimeter_m == 60.0);
  }

  TEST_CASE("figure of merit") {
    const auto t0 = random_raster(30, 30, 3, 1), t1 = random_raster(30, 30, 3, 2);
    CHECK(figure_of_merit(t0, t1, t1).fom == 1.0);
    CHECK(figure_of_merit(t0, t1, t0).fom == 0.0);

    // 10 observed changes: 5 hit, 5 missed, plus 5 false alarms
    auto a = uniform_raster(10, 10, 1);
    a.classes[2] = "two";
    auto b = a, s = a;
    for (std::size_t i = 0; i < 10; ++i) b.cells[i] = 2;
    for (std::size_t i = 0; i < 5; ++i) s.cells[i] = 2;
    for (std::size_t i = 50; i < 55; ++i) s.cells[i] = 2;
    const auto f = figure_of_merit(a, b, s);
    CHECK(f.a == 5);
    CHECK(f.b == 5);
    CHECK(f.c == 0);
    CHECK(f.d == 5);
    CHECK(f.fom == 5.0 / 15.0);

    CHECK_THROWS_AS(figure_of_merit(a, b, random_raster(11, 10, 2, 3)), DataError);
  }

  TEST_CASE("figure of merit matches the naive oracle") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      const auto t0 = random_raster(50, 50, 4, 3 * s, 0.02), t1 = random_raster(50, 50, 4, 3 * s + 1, 0.02);
      const auto sim = random_raster(50, 50, 4, 3 * s + 2, 0.02);
      const auto f = figure_of_merit(t0, t1, sim), g = plus::testing::naive_fom(t0, t1, sim);
      CHECK(f.a == g.a);
      CHECK(f.b == g.b);
      CHECK(f.c == g.c);
      CHECK(f.d == g.d);
      CHECK(f.fom == g.fom);
    }
  }

  TEST_CASE("landscape metric hand cases") {
    const auto u = landscape_metrics(uniform_raster(10, 10, 1));
    CHECK(u.np() == 1);
    CHECK(u.lpi() == 100);
    CHECK(u.pladj() == 100);
    for (std::size_t m = 8; m < 14; ++m) CHECK_FALSE(u.values[m].has_value());

    // one two-cell patch of class 2 inside class 1
    const auto pair = from_rows({{1, 1, 1, 1}, {1, 2, 2, 1}, {1, 1, 1, 1}});
    const auto patches = patchify(pair);
    const auto it = std::find_if(patches.begin(), patches.end(), [](const Patch& p) { return p.class_id == 2; });
    REQUIRE(it != patches.end());
    CHECK(it->perimeter_m / it->area_ha == doctest::Approx(1000.0));

    const auto diag = from_rows({{2, 1, 1}, {1, 1, 1}, {1, 1, 2}});
    const auto rep = landscape_metrics(diag);
    CHECK(*rep.get("ENN_MN") == doctest::Approx(84.853).epsilon(1e-5));
    CHECK(*rep.get("ENN_RA") == 0.0);
    CHECK(*rep.get("PARA_MD") == doctest::Approx(1333.333).epsilon(1e-6));
    CHECK_THROWS_AS(landscape_metrics(from_rows({{kDefaultCategoricalNodata}})), DataError);
  }

  TEST_CASE("distribution statistics") {
    const auto s = distribution_stats({1, 2, 3, 6}, {1, 1, 1, 3});
    CHECK(s[0] == 3.0);
    CHECK(s[1] == doctest::Approx(24.0 / 6.0));
    CHECK(s[2] == 2.5);
    CHECK(s[3] == 5.0);
    CHECK(s[4] == doctest::Approx(std::sqrt(3.5)));
    CHECK(s[5] == doctest::Approx(100.0 * std::sqrt(3.5) / 3.0));
  }

  TEST_CASE("enn agrees with brute force and is symmetric") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      auto r = random_raster(70, 60, 5, 40 + seed, 0.02);
      // sparsify so patches are far apart
      for (auto& c : r.cells) {
        if (c != r.nodata && c > 2) c = 1;
      }
      const auto labels = label_patches(r, 8);
      const auto patches = patchify(r, 8);
      const auto enn = nearest_neighbor_distances(r, labels, patches);
      std::vector<double> brute(patches.size(), 1e300);
      for (std::size_t p = 0; p < patches.size(); ++p) {
        for (std::size_t q = 0; q < patches.size(); ++q) {
          if (p == q || patches[p].class_id != patches[q].class_id) continue;
          for (auto a : patches[p].cells) {
            for (auto b : patches[q].cells) {
              const double dy = static_cast<double>(a / 70) - static_cast<double>(b / 70);
              const double dx = static_cast<double>(a % 70) - static_cast<double>(b % 70);
              brute[p] = std::min(brute[p], std::sqrt(dx * dx + dy * dy) * 30.0);
            }
          }
        }
      }
      for (std::size_t p = 0; p < patches.size(); ++p) {
        if (brute[p] == 1e300) {
          CHECK_FALSE(enn[p].has_value());
        } else {
          REQUIRE(enn[p].has_value());
          CHECK(*enn[p] == doctest::Approx(brute[p]).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("pladj is transpose invariant and np rotation invariant") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto r = random_raster(37, 23, 3, 90 + s, 0.05);
      CHECK(landscape_metrics(r).pladj() == landscape_metrics(transpose(r)).pladj());
      for (int conn : {4, 8}) CHECK(landscape_metrics(r, conn).np() == landscape_metrics(rotate90(r), conn).np());
    }
  }

  TEST_CASE("comparison ranking and ties") {
    MetricsReport ref, same, up, down;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      ref.values[m] = 10.0;
      same.values[m] = 10.0;
      up.values[m] = 12.0;
      down.values[m] = 8.0;
    }
    auto t = compare_reports(ref, {{"same", same}, {"up", up}});
    CHECK(t.first_closest == std::vector<int>{15, 0});
    t = compare_reports(ref, {{"up", up}, {"down", down}});
    CHECK(t.first_closest == std::vector<int>{15, 15});
    CHECK(t.rows[0].tie_for_first);

    MetricsReport a = ref, b = ref, c = ref;
    a.values[0] = 11;
    b.values[0] = 7;
    c.values[0] = 10.5;
    t = compare_reports(ref, {{"a", a}, {"b", b}, {"c", c}});
    CHECK(t.rows[0].rank == std::vector<int>{2, 3, 1});
    CHECK_THROWS_AS(compare_reports(ref, {}), UsageError);
  }

  TEST_CASE("csv writers") {
    const auto rep = landscape_metrics(uniform_raster(4, 4, 1));
    const auto csv = metrics_csv(rep);
    CHECK(csv.rfind("metric,value\nNP,1\nLPI,100\n", 0) == 0);
    CHECK(csv.find("ENN_MN,NA") != std::string::npos);
    FomResult f{1, 2, 3, 4, 0.2};
    CHECK(fom_csv({{"sim", f}}) == "simulation,A,B,C,D,FOM\nsim,1,2,3,4,0.2\n");
  }
}
