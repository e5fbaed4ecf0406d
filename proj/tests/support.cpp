#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "plus/rng.hpp"

namespace plus::testing {

CategoricalRaster random_raster(int w, int h, int classes, std::uint64_t seed, double nodata_share, double cell_size) {
  CategoricalRaster r;
  r.geometry = {w, h, cell_size, 0.0, 0.0};
  for (int k = 1; k <= classes; ++k) r.classes[k] = "c" + std::to_string(k);
  Rng rng(seed);
  r.cells.resize(r.geometry.cell_count());
  for (auto& c : r.cells) {
    c = rng.uniform() < nodata_share ? r.nodata : static_cast<std::int32_t>(1 + rng.below(classes));
  }
  return r;
}

CategoricalRaster uniform_raster(int w, int h, int class_id, double cell_size) {
  CategoricalRaster r;
  r.geometry = {w, h, cell_size, 0.0, 0.0};
  r.classes[class_id] = "c" + std::to_string(class_id);
  r.cells.assign(r.geometry.cell_count(), class_id);
  return r;
}

std::vector<std::vector<std::size_t>> flood_fill_patches(const CategoricalRaster& r, int connectivity) {
  const int w = r.geometry.width, h = r.geometry.height;
  std::vector<char> seen(r.cells.size(), 0);
  std::vector<std::vector<std::size_t>> out;
  for (int r0 = 0; r0 < h; ++r0) {
    for (int c0 = 0; c0 < w; ++c0) {
      const std::size_t s = static_cast<std::size_t>(r0) * w + c0;
      if (seen[s] || r.is_nodata(s)) continue;
      std::vector<std::size_t> patch;
      std::deque<std::pair<int, int>> q{{r0, c0}};
      seen[s] = 1;
      while (!q.empty()) {
        const auto [y, x] = q.front();
        q.pop_front();
        patch.push_back(static_cast<std::size_t>(y) * w + x);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dy == 0 && dx == 0) || (connectivity == 4 && dy != 0 && dx != 0)) continue;
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
            if (seen[j] || r.cells[j] != r.cells[s]) continue;
            seen[j] = 1;
            q.emplace_back(yy, xx);
          }
        }
      }
      std::sort(patch.begin(), patch.end());
      out.push_back(std::move(patch));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

FomResult naive_fom(const CategoricalRaster& t0, const CategoricalRaster& t1, const CategoricalRaster& sim) {
  FomResult f;
  for (std::size_t i = 0; i < t0.cells.size(); ++i) {
    if (t0.is_nodata(i) || t1.is_nodata(i) || sim.is_nodata(i)) continue;
    const bool changed = t0.cells[i] != t1.cells[i];
    const bool sim_changed = sim.cells[i] != t0.cells[i];
    const bool right = sim.cells[i] == t1.cells[i];
    if (changed && !sim_changed) f.a++;
    if (changed && sim_changed && right) f.b++;
    if (changed && sim_changed && !right) f.c++;
    if (!changed && sim_changed) f.d++;
  }
  const auto n = f.a + f.b + f.c + f.d;
  f.fom = n ? static_cast<double>(f.b) / static_cast<double>(n) : 0.0;
  return f;
}

namespace {

// Gaussian elimination with partial pivoting; false when singular.
bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-10) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

}  // namespace

std::optional<double> vertex_enumeration_max(const LinearProgram& lp) {
  const std::size_t n = lp.variables();
  // rows: all constraints then x_j >= 0 as unit rows
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<std::size_t> must, optional_rows;
  for (const auto& c : lp.constraints) {
    (c.relation == Relation::Equal ? must : optional_rows).push_back(rows.size());
    rows.push_back(c.coeffs);
    rhs.push_back(c.rhs);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    optional_rows.push_back(rows.size());
    rows.push_back(e);
    rhs.push_back(0.0);
  }
  // dependent equalities never raise the rank; keep an independent subset
  {
    std::vector<std::vector<double>> basis;
    std::vector<std::size_t> kept;
    for (auto r : must) {
      auto v = rows[r];
      for (const auto& q : basis) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += v[j] * q[j];
        for (std::size_t j = 0; j < n; ++j) v[j] -= dot * q[j];
      }
      double norm = 0.0;
      for (double t : v) norm += t * t;
      norm = std::sqrt(norm);
      if (norm <= 1e-9) continue;
      for (double& t : v) t /= norm;
      basis.push_back(std::move(v));
      kept.push_back(r);
    }
    must = std::move(kept);
  }
  if (must.size() > n) return std::nullopt;
  const std::size_t pick = n - must.size();
  std::optional<double> best;
  std::vector<std::size_t> idx(pick);
  for (std::size_t i = 0; i < pick; ++i) idx[i] = i;
  if (pick > optional_rows.size()) return std::nullopt;
  std::vector<double> x;
  for (;;) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (auto r : must) {
      a.push_back(rows[r]);
      b.push_back(rhs[r]);
    }
    for (auto i : idx) {
      a.push_back(rows[optional_rows[i]]);
      b.push_back(rhs[optional_rows[i]]);
    }
    if (solve_square(a, b, x)) {
      double scale = 1.0;
      for (double v : x) scale = std::max(scale, std::fabs(v));
      if (lp.max_violation(x) <= 1e-8 * scale) {
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
        if (!best || obj > *best) best = obj;
      }
    }
    // next combination
    std::size_t k = pick;
    while (k > 0 && idx[k - 1] == optional_rows.size() - pick + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t i = k; i < pick; ++i) idx[i] = idx[i - 1] + 1;
  }
  return best;
}

LinearProgram random_feasible_lp(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  LinearProgram lp;
  std::vector<double> x0(static_cast<std::size_t>(n));
  for (auto& v : x0) v = rng.uniform() < 0.3 ? 0.0 : u(0.0, 10.0);
  for (int j = 0; j < n; ++j) lp.objective.push_back(u(-1.0, 1.0));
  // bounding row keeps the program bounded
  LinearConstraint bound{std::vector<double>(static_cast<std::size_t>(n), 1.0), Relation::LessEqual, 0.0, "bound"};
  for (double v : x0) bound.rhs += v;
  bound.rhs += u(1.0, 20.0);
  lp.constraints.push_back(bound);
  for (int i = 1; i < m; ++i) {
    LinearConstraint c;
    c.name = "r" + std::to_string(i);
    double ax = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = rng.uniform() < 0.2 ? 0.0 : std::round(u(-5.0, 5.0) * 100.0) / 100.0;
      c.coeffs.push_back(a);
      ax += a * x0[static_cast<std::size_t>(j)];
    }
    const double roll = rng.uniform();
    if (roll < 0.1) {
      c.relation = Relation::Equal;
      c.rhs = ax;
    } else if (roll < 0.4) {
      c.relation = Relation::GreaterEqual;
      c.rhs = ax - u(0.0, 5.0);
    } else {
      c.relation = Relation::LessEqual;
      c.rhs = ax + u(0.0, 5.0);
    }
    lp.constraints.push_back(std::move(c));
  }
  return lp;
}

CaWorld make_ca_world(int size, int classes, std::uint64_t seed) {
  Rng rng(seed);
  CaWorld w;
  const GridGeometry g{size, size, 30.0, 0.0, 0.0};
  w.initial.geometry = g;
  w.initial.cells.resize(g.cell_count());
  std::vector<double> cy(static_cast<std::size_t>(classes)), cx(cy.size());
  for (int k = 0; k < classes; ++k) {
    w.classes.push_back(k + 1);
    w.initial.classes[k + 1] = "class_" + std::to_string(k + 1);
    cy[static_cast<std::size_t>(k)] = rng.uniform() * size;
    cx[static_cast<std::size_t>(k)] = rng.uniform() * size;
  }
  // nearest-centre regions with a wobbly distance so edges are irregular
  const double ph = rng.uniform() * 6.28;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double best = std::numeric_limits<double>::max();
      int arg = 0;
      for (int k = 0; k < classes; ++k) {
        const double wob = 1.0 + 0.15 * std::sin(0.07 * (r + 13 * k) + ph) * std::cos(0.05 * (c - 7 * k));
        const double d = std::hypot(r - cy[static_cast<std::size_t>(k)], c - cx[static_cast<std::size_t>(k)]) * wob;
        if (d < best) {
          best = d;
          arg = k;
        }
      }
      w.initial.cells[static_cast<std::size_t>(r) * size + c] = arg + 1;
    }
  }
  w.surfaces.factor_names = {"planted"};
  const double sigma = size / 2.5;
  for (int k = 0; k < classes; ++k) {
    GrowthSurface s;
    s.class_id = k + 1;
    s.trained = true;
    s.probability.geometry = g;
    s.probability.values.resize(g.cell_count());
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        const double d = std::hypot(r - cy[static_cast<std::size_t>(k)], c - cx[static_cast<std::size_t>(k)]);
        const double p = std::exp(-d * d / (2 * sigma * sigma)) * (0.8 + 0.2 * rng.uniform());
        s.probability.values[static_cast<std::size_t>(r) * size + c] = std::round(p * 50.0) / 50.0;
      }
    }
    w.surfaces.surfaces.push_back(std::move(s));
  }
  return w;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("plus_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace plus::testing
