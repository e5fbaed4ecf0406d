#include "plus/cars.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "plus/errors.hpp"
#include "plus/parallel.hpp"
#include "plus/text.hpp"

namespace plus {

TransitionMatrix::TransitionMatrix(std::size_t classes, std::vector<std::uint8_t> allowed)
    : size_(classes), allowed_(std::move(allowed)) {
  if (allowed_.size() != classes * classes)
    throw UsageError("transition matrix must be " + std::to_string(classes) + "x" + std::to_string(classes));
  for (std::size_t i = 0; i < classes; ++i) {
    for (std::size_t j = 0; j < classes; ++j) {
      const auto v = allowed_[i * classes + j];
      if (v > 1) throw UsageError("transition matrix entries must be 0 or 1");
      if (i == j && v != 1) throw UsageError("transition matrix diagonal must be 1");
    }
  }
}

TransitionMatrix TransitionMatrix::allow_all(std::size_t classes) {
  return TransitionMatrix(classes, std::vector<std::uint8_t>(classes * classes, 1));
}

std::int64_t DemandSchedule::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& [id, n] : targets) t += n;
  return t;
}

void SimulationConfig::validate() const {
  const std::size_t k = classes.size();
  if (k == 0) throw UsageError("simulation needs at least one class");
  if (k > 254) throw UsageError("at most 254 classes are supported");
  if (std::set<int>(classes.begin(), classes.end()).size() != k) throw UsageError("duplicate class ids");
  if (window < 3 || window % 2 == 0) throw UsageError("window must be odd and >= 3");
  if (window > 255) throw UsageError("window must be <= 255");
  if (!weights.empty() && weights.size() != k) throw UsageError("weights must have one entry per class");
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw UsageError("weights must be finite and >= 0");
  }
  if (!mu.empty() && mu.size() != k) throw UsageError("mu must have one entry per class");
  for (double m : mu) {
    if (!(m >= 0.0 && m <= 1.0)) throw UsageError("mu must lie in [0,1]");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0,1)");
  if (step < 1) throw UsageError("step must be >= 1");
  if (max_iterations < 0) throw UsageError("max_iterations must be >= 0");
  if (tolerance && !(*tolerance >= 0)) throw UsageError("tolerance must be >= 0");
  if (!tm.empty() && tm.size() != k) throw UsageError("transition matrix size does not match the class list");
  for (const auto& [id, n] : demand.targets) {
    if (n < 0) throw UsageError("demand for class " + std::to_string(id) + " is negative");
  }
}

double neighborhood_effect(const CategoricalRaster& snapshot, int row, int col, int class_id, int window,
                           double weight) {
  const int half = window / 2;
  const auto& g = snapshot.geometry;
  int count = 0;
  for (int r = std::max(0, row - half); r <= std::min(g.height - 1, row + half); ++r) {
    for (int c = std::max(0, col - half); c <= std::min(g.width - 1, col + half); ++c) {
      if (r == row && c == col) continue;
      count += snapshot.at(r, c) == class_id;
    }
  }
  return static_cast<double>(count) / static_cast<double>(window * window - 1) * weight;
}

double update_demand_coeff(double d_prev, double g_last, double g_before) noexcept {
  if (std::fabs(g_last) <= std::fabs(g_before)) return d_prev;
  if (0 > g_before && g_before > g_last) return d_prev * g_before / g_last;
  if (g_last > g_before && g_before > 0) return d_prev * g_last / g_before;
  return d_prev;
}

double overall_probability(double p, double omega, double d, double mu, double r, bool seeding) noexcept {
  if (seeding && omega == 0.0 && r < p) return p * (r * mu) * d;
  return p * omega * d;
}

std::optional<std::size_t> roulette_select(std::span<const double> op, double u) noexcept {
  double total = 0.0;
  for (double v : op) total += v;
  if (!(total > 0.0)) return std::nullopt;
  const double target = u * total;
  double cumulative = 0.0;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (op[i] <= 0.0) continue;
    cumulative += op[i];
    last = i;
    if (target < cumulative) return i;
  }
  return last;
}

std::optional<std::size_t> roulette_select(std::span<const double> op, Rng& rng) {
  return roulette_select(op, rng.uniform());
}

int descend_threshold(double residual_sum_prev, double residual_sum_now, double step, int l) noexcept {
  return residual_sum_prev - residual_sum_now < step ? l + 1 : l;
}

bool gate_change(double p_candidate, double delta, int l, double r_gate, bool admissible) noexcept {
  return admissible && p_candidate > std::pow(delta, l) * r_gate;
}

namespace {

constexpr std::uint8_t kFrozen = 255;

// Purposes mixed into the keyed draws so each random role gets its own stream.
enum Draw : std::uint64_t { kSeedDraw = 0, kRouletteDraw = 1, kGateDraw1 = 2, kGateDraw2 = 3 };

struct Engine {
  const SimulationConfig& cfg;
  std::size_t k = 0;
  std::size_t n = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> state;      // class index per cell, kFrozen for nodata
  std::vector<double> prob;             // n x k growth probabilities
  std::vector<std::uint16_t> neighbors; // n x k counts in the snapshot window
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> targets;
  std::vector<double> weights;
  std::vector<double> mu;
  std::vector<std::uint32_t> mutable_cells;

  explicit Engine(const SimulationConfig& c) : cfg(c) {}

  void count_neighbors(int threads) {
    const int half = cfg.window / 2;
    neighbors.assign(n * k, 0);
    parallel_for(static_cast<std::size_t>(height), threads, 16, [&](std::size_t rb, std::size_t re) {
      for (int row = static_cast<int>(rb); row < static_cast<int>(re); ++row) {
        const int r0 = std::max(0, row - half), r1 = std::min(height - 1, row + half);
        for (int col = 0; col < width; ++col) {
          const std::size_t i = static_cast<std::size_t>(row) * width + col;
          if (state[i] == kFrozen) continue;
          std::uint16_t* out = &neighbors[i * k];
          const int c0 = std::max(0, col - half), c1 = std::min(width - 1, col + half);
          for (int r = r0; r <= r1; ++r) {
            const std::uint8_t* line = &state[static_cast<std::size_t>(r) * width];
            for (int c = c0; c <= c1; ++c) {
              const auto s = line[c];
              if (s != kFrozen) ++out[s];
            }
          }
          --out[state[i]];  // the centre is not part of its own neighbourhood
        }
      }
    });
  }

  double residual_sum() const {
    double s = 0;
    for (std::size_t c = 0; c < k; ++c) s += std::fabs(static_cast<double>(counts[c] - targets[c]));
    return s;
  }
};

}  // namespace

SimulationResult simulate(const CategoricalRaster& initial, const GrowthSurfaceSet& surfaces,
                          const SimulationConfig& config) {
  config.validate();
  initial.validate();
  const std::size_t k = config.classes.size();
  Engine eng(config);
  eng.k = k;
  eng.n = initial.cells.size();
  eng.width = initial.geometry.width;
  eng.height = initial.geometry.height;

  std::map<int, std::uint8_t> index_of;
  for (std::size_t c = 0; c < k; ++c) index_of[config.classes[c]] = static_cast<std::uint8_t>(c);

  // demand schedule must cover exactly the simulated classes
  std::set<int> demand_ids;
  for (const auto& [id, v] : config.demand.targets) demand_ids.insert(id);
  if (demand_ids != std::set<int>(config.classes.begin(), config.classes.end()))
    throw DataError("demand classes do not match the simulated class list");
  for (const auto& [id, name] : initial.classes) {
    if (!index_of.contains(id)) throw DataError("raster legend class " + std::to_string(id) + " is not simulated");
  }

  eng.state.resize(eng.n);
  eng.counts.assign(k, 0);
  for (std::size_t i = 0; i < eng.n; ++i) {
    if (initial.is_nodata(i)) {
      eng.state[i] = kFrozen;
      continue;
    }
    const auto it = index_of.find(initial.cells[i]);
    if (it == index_of.end()) throw DataError("cell class " + std::to_string(initial.cells[i]) + " is not simulated");
    eng.state[i] = it->second;
    ++eng.counts[it->second];
    eng.mutable_cells.push_back(static_cast<std::uint32_t>(i));
  }
  eng.targets.resize(k);
  for (std::size_t c = 0; c < k; ++c) eng.targets[c] = config.demand.targets.at(config.classes[c]);
  const auto valid = static_cast<std::int64_t>(eng.mutable_cells.size());
  if (config.demand.total() != valid) {
    throw DataError("demand total " + std::to_string(config.demand.total()) + " differs from the " +
                    std::to_string(valid) + " valid cells of the initial raster");
  }

  eng.prob.assign(eng.n * k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const GrowthSurface* s = surfaces.find(config.classes[c]);
    if (!s) throw DataError("no growth surface for class " + std::to_string(config.classes[c]));
    if (!s->probability.geometry.same_shape(initial.geometry))
      throw DataError("growth surface for class " + std::to_string(config.classes[c]) + " is not aligned");
    for (std::size_t i = 0; i < eng.n; ++i) {
      const double p = s->probability.values[i];
      if (s->probability.is_nodata(i) || eng.state[i] == kFrozen) continue;
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("growth probability outside [0,1]");
      eng.prob[i * k + c] = p;
    }
  }
  eng.weights = config.weights.empty() ? std::vector<double>(k, 1.0) : config.weights;
  eng.mu = config.mu.empty() ? std::vector<double>(k, 0.1) : config.mu;
  const TransitionMatrix tm = config.tm.empty() ? TransitionMatrix::allow_all(k) : config.tm;
  const double tol = config.resolved_tolerance();

  // An unmet class needs enough admissible source cells with P > 0.
  for (std::size_t c = 0; c < k; ++c) {
    const double deficit = static_cast<double>(eng.targets[c] - eng.counts[c]);
    if (deficit <= tol) continue;
    std::int64_t available = 0;
    for (auto i : eng.mutable_cells) {
      const auto from = eng.state[i];
      available += from != c && tm.allows(from, c) && eng.prob[i * k + c] > 0.0;
    }
    if (static_cast<double>(available) < deficit - tol) {
      throw InfeasibleDemandError(config.classes[c],
                                  "demand infeasible: class " + std::to_string(config.classes[c]) + " needs " +
                                      std::to_string(static_cast<std::int64_t>(deficit)) + " more cells but only " +
                                      std::to_string(available) + " admissible source cells exist");
    }
  }

  SimulationResult result;
  std::vector<double> coeff(k, 1.0);
  std::vector<std::int64_t> g_before(k, 0), g_last(k, 0);
  std::vector<double> op(k);
  const double denom = static_cast<double>(config.window * config.window - 1);
  std::vector<std::uint32_t> order = eng.mutable_cells;
  int l = 0;

  auto converged = [&] {
    for (std::size_t c = 0; c < k; ++c) {
      if (std::fabs(static_cast<double>(eng.counts[c] - eng.targets[c])) > tol) return false;
    }
    return true;
  };

  int t = 0;
  for (; t < config.max_iterations; ++t) {
    if (converged()) break;
    for (std::size_t c = 0; c < k; ++c) {
      const std::int64_t g = eng.counts[c] - eng.targets[c];
      g_before[c] = g_last[c];
      g_last[c] = g;
      // D update runs on the demand gap (target - current); D^0 = D^1 = 1.
      if (t >= 2) coeff[c] = update_demand_coeff(coeff[c], -static_cast<double>(g_last[c]),
                                                 -static_cast<double>(g_before[c]));
    }
    const std::vector<double> coeff_used = coeff;
    const double sum_prev = eng.residual_sum();

    eng.count_neighbors(config.threads);
    Rng visit(derive_seed(config.seed, "visit", static_cast<std::uint64_t>(t)));
    visit.shuffle(std::span<std::uint32_t>(order));
    const std::uint64_t draw_seed = derive_seed(config.seed, "draw", static_cast<std::uint64_t>(t));

    std::size_t unmet = 0;
    for (std::size_t c = 0; c < k; ++c) unmet += eng.counts[c] < eng.targets[c];

    std::int64_t changes = 0;
    for (const std::uint32_t i : order) {
      if (unmet == 0) break;
      const std::uint8_t from = eng.state[i];
      if (static_cast<double>(eng.counts[from] - eng.targets[from]) <= -tol) continue;
      const double* p = &eng.prob[static_cast<std::size_t>(i) * k];
      const std::uint16_t* nb = &eng.neighbors[static_cast<std::size_t>(i) * k];
      bool any_candidate = false;
      for (std::size_t c = 0; c < k; ++c) {
        if (c != from && eng.counts[c] >= eng.targets[c]) {
          op[c] = 0.0;
          continue;
        }
        const double omega = static_cast<double>(nb[c]) / denom * eng.weights[c];
        double r = 1.0;
        if (config.patch_seeding && omega == 0.0) r = keyed_uniform(draw_seed, i, c, kSeedDraw);
        op[c] = overall_probability(p[c], omega, coeff_used[c], eng.mu[c], r, config.patch_seeding);
        any_candidate |= c != from && op[c] > 0.0;
      }
      if (!any_candidate) continue;
      const auto winner = roulette_select(op, keyed_uniform(draw_seed, i, k, kRouletteDraw));
      if (!winner || *winner == from) continue;
      const std::size_t to = *winner;
      const double r_gate =
          truncated_gate_normal(keyed_uniform(draw_seed, i, to, kGateDraw1), keyed_uniform(draw_seed, i, to, kGateDraw2));
      if (!gate_change(p[to], config.delta, l, r_gate, tm.allows(from, to))) continue;

      eng.state[i] = static_cast<std::uint8_t>(to);
      --eng.counts[from];
      ++eng.counts[to];
      if (eng.counts[to] == eng.targets[to]) --unmet;
      if (eng.counts[from] == eng.targets[from] - 1) ++unmet;
      ++changes;
      result.changes.push_back({t, static_cast<std::int64_t>(i), config.classes[from], config.classes[to]});
    }

    const double sum_now = eng.residual_sum();
    l = descend_threshold(sum_prev, sum_now, static_cast<double>(config.step), l);
    IterationTrace tr;
    tr.iteration = t;
    tr.residual.resize(k);
    for (std::size_t c = 0; c < k; ++c) tr.residual[c] = eng.counts[c] - eng.targets[c];
    tr.coefficient = coeff_used;
    tr.decay_steps = l;
    tr.changes = changes;
    result.trace.push_back(std::move(tr));
  }
  result.converged = converged();
  result.iterations = t;

  CategoricalRaster out;
  out.geometry = initial.geometry;
  out.nodata = initial.nodata;
  out.classes = initial.classes;
  out.cells.resize(eng.n);
  for (std::size_t i = 0; i < eng.n; ++i) {
    out.cells[i] = eng.state[i] == kFrozen ? initial.nodata : config.classes[eng.state[i]];
    if (eng.state[i] != kFrozen && !out.classes.contains(out.cells[i]))
      out.classes[out.cells[i]] = "class_" + std::to_string(out.cells[i]);
  }
  result.final_raster = std::move(out);
  return result;
}

std::string trace_csv(const SimulationResult& result, const std::vector<int>& classes) {
  std::string csv = "iteration";
  for (int id : classes) csv += ",G_" + std::to_string(id);
  for (int id : classes) csv += ",D_" + std::to_string(id);
  csv += ",l,changes\n";
  for (const auto& tr : result.trace) {
    csv += std::to_string(tr.iteration);
    for (auto g : tr.residual) csv += "," + std::to_string(g);
    for (double d : tr.coefficient) csv += "," + format_double(d);
    csv += "," + std::to_string(tr.decay_steps) + "," + std::to_string(tr.changes) + "\n";
  }
  return csv;
}

std::string change_log_csv(const SimulationResult& result) {
  std::string csv = "iteration,cell,from,to\n";
  csv.reserve(csv.size() + result.changes.size() * 20);
  for (const auto& c : result.changes) {
    csv += std::to_string(c.iteration) + "," + std::to_string(c.cell) + "," + std::to_string(c.from) + "," +
           std::to_string(c.to) + "\n";
  }
  return csv;
}

}  // namespace plus
