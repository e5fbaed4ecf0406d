#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plus/cars.hpp"
#include "plus/raster.hpp"
#include "plus/simplex.hpp"

namespace plus {

/// Row-stochastic class transition probabilities over one calibration interval.
struct MarkovMatrix {
  std::vector<int> classes;
  std::vector<double> p;  // row-major, from x to
  double interval_years = 1.0;

  double at(std::size_t from, std::size_t to) const { return p[from * classes.size() + to]; }
};

/// Cell-count transition frequencies; rows without t0 cells become identity rows.
MarkovMatrix estimate_markov(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1,
                             double interval_years = 1.0);

/// areas x M^steps (row-vector convention).
std::vector<double> project_markov(std::span<const double> areas, const MarkovMatrix& m, int steps);

/// Componentwise linear blend; throws UsageError outside [year_a, year_b].
std::vector<double> interpolate_demand(std::span<const double> areas_a, double year_a,
                                       std::span<const double> areas_b, double year_b, double target_year);

/// How a constraint row takes part in the program.
enum class RowMode {
  Hard,  // enforced as written
  Soft,  // goal: reach the rhs if possible, else pin the best attainable level
  Off,   // ignored
};

struct MopConstraint {
  LinearConstraint row;
  RowMode mode = RowMode::Hard;
  std::string note;
};

struct MopVariable {
  std::string name;
  int class_id = 0;
};

struct ScenarioWeights {
  std::map<std::string, double> objectives;  // objective name -> weight
};

/// Multi-objective land-allocation program: shared feasible set, named linear
/// objectives, scenarios as objective weightings.
struct MopConfig {
  double total_area = 0.0;  // hectares
  std::vector<MopVariable> variables;
  std::map<std::string, std::vector<double>> objectives;
  std::vector<MopConstraint> constraints;
  std::map<std::string, ScenarioWeights> scenarios;

  void validate() const;
};

/// Built-in scenario configuration (see configs/wuhan_mop.json).
const std::string& default_mop_config_json();
MopConfig parse_mop_config(const std::string& json_text);
MopConfig load_mop_config(const std::filesystem::path& path);

struct SoftRowOutcome {
  std::string name;
  double target = 0.0;
  double attained = 0.0;
  bool met = false;
};

struct ScenarioSolution {
  std::string scenario;
  std::vector<double> hectares;                  // per variable
  std::map<std::string, double> objective_values;
  std::map<std::string, double> single_optima;   // per objective used in the scalarization
  std::vector<SoftRowOutcome> soft_rows;
};

/// Hard rows plus the pinned levels of soft rows, with objective left empty.
LinearProgram feasible_program(const MopConfig& config, std::vector<SoftRowOutcome>* soft_rows = nullptr);

/// Single objective: maximize it. Several: maximize sum_j w_j f_j(x) / f_j*,
/// each f_j* being that objective's own optimum over the same feasible set.
ScenarioSolution solve_scenario(const MopConfig& config, const std::string& scenario);

double evaluate_row(const LinearConstraint& row, std::span<const double> x);

/// Largest-remainder rounding of per-class hectares to cell counts summing to
/// total_cells exactly (quotas are first rescaled to that total).
std::vector<std::int64_t> hectares_to_cells(std::span<const double> hectares, double cell_hectares,
                                            std::int64_t total_cells);

/// A demand schedule annotated for the demand file.
struct DemandFile {
  std::string scenario;
  double cell_size = 30.0;
  struct Entry {
    int class_id = 0;
    std::string name;
    double hectares = 0.0;
    std::int64_t cells = 0;
  };
  std::vector<Entry> classes;

  DemandSchedule schedule() const;
};

std::string demand_file_json(const DemandFile& f);
DemandFile parse_demand_file(const std::string& json_text);
DemandFile load_demand_file(const std::filesystem::path& path);

/// Baseline scenario: areas at t1 projected with the t0->t1 Markov matrix in
/// steps of interval_years from year_t1, interpolated to target_year.
struct BaselineOptions {
  double year_t0 = 0.0;
  double year_t1 = 1.0;
  std::optional<double> interval_years;  // default year_t1 - year_t0
  double target_year = 1.0;
};

DemandFile baseline_demand(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1,
                           const BaselineOptions& options);

/// Converts a MOP solution to a demand file for a grid with the given cell
/// size and valid-cell total.
DemandFile scenario_demand(const MopConfig& config, const ScenarioSolution& solution, double cell_size,
                           std::int64_t total_cells);

}  // namespace plus
