#include "synth.hpp"

#include <cmath>
#include <numbers>

#include "plus/errors.hpp"
#include "plus/rng.hpp"

namespace plus::synth {

World make_world(const WorldOptions& o) {
  if (o.size < 16) throw UsageError("synthetic world needs size >= 16");
  const int n = o.size;
  GridGeometry g{n, n, o.cell_size, 0.0, 0.0};
  Rng rng(derive_seed(o.seed, "synth", 0));
  const double phase = rng.uniform() * 2.0 * std::numbers::pi;

  ContinuousRaster dist{g, std::vector<double>(g.cell_count()), kDefaultContinuousNodata};
  ContinuousRaster slope = dist, noise = dist;
  double a[3], fx[3], fy[3];
  for (int k = 0; k < 3; ++k) {
    a[k] = 1.0 + rng.uniform();
    fx[k] = (1 + k) * 2.0 * std::numbers::pi / n * (0.5 + rng.uniform());
    fy[k] = (1 + k) * 2.0 * std::numbers::pi / n * (0.5 + rng.uniform());
  }
  std::vector<int> road(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    road[r] = n / 2 + static_cast<int>(std::lround(n / 8.0 * std::sin(2.0 * std::numbers::pi * r / n + phase)));
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      dist.values[i] = std::abs(c - road[r]);
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[k] * std::sin(fx[k] * c + k) * std::cos(fy[k] * r + 2 * k);
      slope.values[i] = s + 0.1 * rng.uniform();
      noise.values[i] = rng.uniform();
    }
  }

  World w;
  const Legend legend{{1, "cropland"}, {2, "urban"}, {3, "water"}};
  w.t0 = CategoricalRaster{g, legend, std::vector<std::int32_t>(g.cell_count(), 1), kDefaultCategoricalNodata};
  // water disc on the left, an existing settlement to the right of the road
  const double wr = 0.8 * n, wc = 0.15 * n, rad = n / 10.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      const double d = dist.values[i];
      if (std::hypot(r - wr, c - wc) <= rad && d >= o.dist_threshold) w.t0.cells[i] = 3;
      if (r >= n * 6 / 10 && r < n * 3 / 4 && d >= o.dist_threshold && d < o.dist_threshold + 15 && c > road[r])
        w.t0.cells[i] = 2;
    }
  }
  w.t1 = w.t0;
  for (std::size_t i = 0; i < w.t1.cells.size(); ++i) {
    if (dist.values[i] < o.dist_threshold) w.t1.cells[i] = 2;
  }
  w.factors.add("dist", std::move(dist));
  w.factors.add("slope", std::move(slope));
  w.factors.add("noise", std::move(noise));
  return w;
}

void save_world(const World& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_ascii_grid(world.t0, dir / "lu_t0.asc");
  save_ascii_grid(world.t1, dir / "lu_t1.asc");
  for (std::size_t i = 0; i < world.factors.size(); ++i)
    save_ascii_grid(world.factors.layer(i), dir / (world.factors.name(i) + ".asc"));
}

}  // namespace plus::synth
