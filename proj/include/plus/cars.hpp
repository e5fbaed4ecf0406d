#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plus/leas.hpp"
#include "plus/raster.hpp"
#include "plus/rng.hpp"

namespace plus {

/// Binary admissibility of class-to-class conversion, indexed by position in
/// SimulationConfig::classes. An empty matrix allows everything.
class TransitionMatrix {
public:
  TransitionMatrix() = default;
  /// Row-major K x K of 0/1 entries; the diagonal must be 1.
  TransitionMatrix(std::size_t classes, std::vector<std::uint8_t> allowed);
  static TransitionMatrix allow_all(std::size_t classes);

  bool allows(std::size_t from, std::size_t to) const noexcept {
    return allowed_.empty() || allowed_[from * size_ + to] != 0;
  }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return allowed_.empty(); }

private:
  std::size_t size_ = 0;
  std::vector<std::uint8_t> allowed_;
};

/// Target cell count per class id.
struct DemandSchedule {
  std::map<int, std::int64_t> targets;

  std::int64_t total() const noexcept;
};

struct SimulationConfig {
  std::vector<int> classes;       // class ids; defines the order of every per-class vector
  int window = 3;                 // odd neighbourhood edge length
  std::vector<double> weights;    // w_k; empty = 1 for all
  std::vector<double> mu;         // patch-seed threshold per class; empty = 0.1 for all
  double delta = 0.9;             // threshold decay factor
  std::int64_t step = 500;        // cells of aggregate progress expected per iteration
  int max_iterations = 1000;
  std::optional<double> tolerance;  // cells per class; default step / 2
  std::uint64_t seed = 0;
  bool patch_seeding = true;
  TransitionMatrix tm;
  DemandSchedule demand;
  int threads = 0;

  double resolved_tolerance() const noexcept {
    return tolerance ? *tolerance : static_cast<double>(step) / 2.0;
  }
  /// Throws UsageError on out-of-range parameters.
  void validate() const;
};

/// Weighted share of class k in the window around (row, col) at the previous
/// iteration, excluding the centre; edge windows keep the n*n-1 denominator.
double neighborhood_effect(const CategoricalRaster& snapshot, int row, int col, int class_id, int window,
                           double weight);

/// Self-adaptive demand coefficient from the two latest residuals
/// (g_last = G^{t-1}, g_before = G^{t-2}).
double update_demand_coeff(double d_prev, double g_last, double g_before) noexcept;

/// Overall probability with the patch-seed branch: when seeding is enabled,
/// Omega == 0 and r < P, OP = P * (r * mu) * D; otherwise P * Omega * D.
double overall_probability(double p, double omega, double d, double mu, double r, bool seeding) noexcept;

/// Roulette wheel over non-negative weights with a uniform draw u in [0,1).
std::optional<std::size_t> roulette_select(std::span<const double> op, double u) noexcept;
std::optional<std::size_t> roulette_select(std::span<const double> op, Rng& rng);

/// Decay counter update: l + 1 when the aggregate residual shrank by less
/// than `step` during the iteration.
int descend_threshold(double residual_sum_prev, double residual_sum_now, double step, int l) noexcept;

/// Change iff P_c > delta^l * r_gate and the transition is admissible.
bool gate_change(double p_candidate, double delta, int l, double r_gate, bool admissible) noexcept;

struct IterationTrace {
  int iteration = 0;
  std::vector<std::int64_t> residual;  // current - target per class, after the sweep
  std::vector<double> coefficient;     // D_k used during the sweep
  int decay_steps = 0;                 // l after the sweep
  std::int64_t changes = 0;
};

struct ChangeRecord {
  int iteration = 0;
  std::int64_t cell = 0;
  std::int32_t from = 0;
  std::int32_t to = 0;
};

struct SimulationResult {
  CategoricalRaster final_raster;
  std::vector<IterationTrace> trace;
  std::vector<ChangeRecord> changes;
  bool converged = false;
  int iterations = 0;
};

/// Runs the patch-seeded CA until every |G_k| <= tolerance or max_iterations.
/// Throws InfeasibleDemandError when an unmet class lacks admissible source
/// cells, DataError on inconsistent inputs.
SimulationResult simulate(const CategoricalRaster& initial, const GrowthSurfaceSet& surfaces,
                          const SimulationConfig& config);

std::string trace_csv(const SimulationResult& result, const std::vector<int>& classes);
std::string change_log_csv(const SimulationResult& result);

}  // namespace plus
