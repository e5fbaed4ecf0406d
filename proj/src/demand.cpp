#include "plus/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "plus/errors.hpp"

namespace plus {

using nlohmann::json;

namespace {

std::size_t class_index(const std::vector<int>& classes, int id) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), id);
  return static_cast<std::size_t>(it - classes.begin());
}

}  // namespace

MarkovMatrix estimate_markov(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1, double interval_years) {
  const NamedGeometry pair[2] = {{"land use t0", lu_t0.geometry}, {"land use t1", lu_t1.geometry}};
  assert_aligned(pair);
  if (!(interval_years > 0)) throw UsageError("interval_years must be > 0");
  std::set<int> ids;
  for (const auto& [id, n] : lu_t0.classes) ids.insert(id);
  for (const auto& [id, n] : lu_t1.classes) ids.insert(id);
  MarkovMatrix m;
  m.classes.assign(ids.begin(), ids.end());
  m.interval_years = interval_years;
  const std::size_t k = m.classes.size();
  std::vector<std::int64_t> counts(k * k, 0);
  for (std::size_t i = 0; i < lu_t0.cells.size(); ++i) {
    if (lu_t0.is_nodata(i) || lu_t1.is_nodata(i)) continue;
    ++counts[class_index(m.classes, lu_t0.cells[i]) * k + class_index(m.classes, lu_t1.cells[i])];
  }
  m.p.assign(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    std::int64_t row = 0;
    for (std::size_t b = 0; b < k; ++b) row += counts[a * k + b];
    if (row == 0) {
      m.p[a * k + a] = 1.0;
      continue;
    }
    for (std::size_t b = 0; b < k; ++b)
      m.p[a * k + b] = static_cast<double>(counts[a * k + b]) / static_cast<double>(row);
  }
  return m;
}

std::vector<double> project_markov(std::span<const double> areas, const MarkovMatrix& m, int steps) {
  const std::size_t k = m.classes.size();
  if (areas.size() != k) throw UsageError("area vector does not match the Markov matrix");
  if (steps < 0) throw UsageError("steps must be >= 0");
  std::vector<double> cur(areas.begin(), areas.end()), next(k);
  for (int s = 0; s < steps; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) next[b] += cur[a] * m.at(a, b);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> interpolate_demand(std::span<const double> areas_a, double year_a,
                                       std::span<const double> areas_b, double year_b, double target_year) {
  if (!(year_a < year_b)) throw UsageError("interpolation needs year_a < year_b");
  if (target_year < year_a || target_year > year_b) throw UsageError("target year outside the interpolation range");
  if (areas_a.size() != areas_b.size()) throw UsageError("area vectors differ in length");
  const double w = (target_year - year_a) / (year_b - year_a);
  std::vector<double> out(areas_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = areas_a[i] + w * (areas_b[i] - areas_a[i]);
  return out;
}

void MopConfig::validate() const {
  if (!(total_area > 0)) throw UsageError("total_area must be > 0");
  if (variables.empty()) throw UsageError("scenario config declares no variables");
  const std::size_t n = variables.size();
  for (const auto& [name, c] : objectives) {
    if (c.size() != n) throw UsageError("objective '" + name + "' needs " + std::to_string(n) + " coefficients");
  }
  std::size_t active = 0;
  for (const auto& c : constraints) {
    if (c.row.coeffs.size() != n)
      throw UsageError("constraint '" + c.row.name + "' needs " + std::to_string(n) + " coefficients");
    if (c.mode == RowMode::Soft && c.row.relation == Relation::Equal)
      throw UsageError("constraint '" + c.row.name + "': soft rows must be inequalities");
    active += c.mode != RowMode::Off;
  }
  if (active == 0) throw UsageError("scenario config has no active constraint");
  for (const auto& [sname, s] : scenarios) {
    if (s.objectives.empty()) throw UsageError("scenario '" + sname + "' selects no objective");
    for (const auto& [oname, w] : s.objectives) {
      if (!objectives.contains(oname)) throw UsageError("scenario '" + sname + "' uses unknown objective '" + oname + "'");
      if (!(w > 0)) throw UsageError("scenario '" + sname + "' weights must be > 0");
    }
  }
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw UsageError("unknown key '" + it.key() + "' in " + where);
  }
}

// A coefficient is a number or an array of factors multiplied together.
double number_or_product(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && !j.empty()) {
    double v = 1.0;
    for (const auto& f : j) {
      if (!f.is_number()) throw UsageError("non-numeric factor in " + where);
      v *= f.get<double>();
    }
    return v;
  }
  throw UsageError("expected a number or an array of factors in " + where);
}

Relation parse_relation(const std::string& s, const std::string& where) {
  if (s == "<=") return Relation::LessEqual;
  if (s == ">=") return Relation::GreaterEqual;
  if (s == "=" || s == "==") return Relation::Equal;
  throw UsageError("bad relation '" + s + "' in " + where);
}

RowMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "hard") return RowMode::Hard;
  if (s == "soft") return RowMode::Soft;
  if (s == "off") return RowMode::Off;
  throw UsageError("bad mode '" + s + "' in " + where + " (hard|soft|off)");
}

}  // namespace

MopConfig parse_mop_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(j, {"schema_version", "total_area", "variables", "objectives", "constraints", "scenarios"},
                   "scenario config");
    if (j.value("schema_version", 0) != 1) throw UsageError("scenario config schema_version must be 1");
    MopConfig cfg;
    cfg.total_area = j.at("total_area").get<double>();
    for (const auto& v : j.at("variables")) {
      reject_unknown(v, {"name", "class_id"}, "variable");
      cfg.variables.push_back({v.at("name").get<std::string>(), v.at("class_id").get<int>()});
    }
    const std::size_t n = cfg.variables.size();
    for (auto it = j.at("objectives").begin(); it != j.at("objectives").end(); ++it) {
      std::vector<double> c;
      for (const auto& x : it.value()) c.push_back(number_or_product(x, "objective " + it.key()));
      cfg.objectives[it.key()] = std::move(c);
    }
    for (const auto& c : j.at("constraints")) {
      reject_unknown(c, {"name", "coeffs", "relation", "rhs", "rhs_share", "mode", "note"}, "constraint");
      MopConstraint mc;
      mc.row.name = c.at("name").get<std::string>();
      const std::string where = "constraint '" + mc.row.name + "'";
      for (const auto& x : c.at("coeffs")) mc.row.coeffs.push_back(number_or_product(x, where));
      mc.row.relation = parse_relation(c.at("relation").get<std::string>(), where);
      if (c.contains("rhs") == c.contains("rhs_share")) throw UsageError(where + " needs exactly one of rhs, rhs_share");
      mc.row.rhs = c.contains("rhs") ? number_or_product(c.at("rhs"), where)
                                     : c.at("rhs_share").get<double>() * cfg.total_area;
      if (c.contains("mode")) mc.mode = parse_mode(c.at("mode").get<std::string>(), where);
      mc.note = c.value("note", "");
      cfg.constraints.push_back(std::move(mc));
    }
    for (auto it = j.at("scenarios").begin(); it != j.at("scenarios").end(); ++it) {
      ScenarioWeights w;
      for (auto o = it.value().begin(); o != it.value().end(); ++o) w.objectives[o.key()] = o.value().get<double>();
      cfg.scenarios[it.key()] = std::move(w);
    }
    (void)n;
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw UsageError(std::string("scenario config: ") + e.what());
  }
}

MopConfig load_mop_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mop_config(ss.str());
}

double evaluate_row(const LinearConstraint& row, std::span<const double> x) {
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) v += row.coeffs[j] * x[j];
  return v;
}

LinearProgram feasible_program(const MopConfig& config, std::vector<SoftRowOutcome>* soft_rows) {
  config.validate();
  LinearProgram lp;
  lp.objective.assign(config.variables.size(), 0.0);
  for (const auto& c : config.constraints) {
    if (c.mode == RowMode::Hard) lp.constraints.push_back(c.row);
  }
  // Soft rows in declaration order: reach the goal if possible, else pin the
  // best level attainable under everything fixed so far.
  for (const auto& c : config.constraints) {
    if (c.mode != RowMode::Soft) continue;
    LinearProgram probe = lp;
    probe.objective = c.row.coeffs;
    const Sense sense = c.row.relation == Relation::GreaterEqual ? Sense::Maximize : Sense::Minimize;
    const LpSolution best = solve_lp(probe, sense);
    SoftRowOutcome out{c.row.name, c.row.rhs, best.objective, false};
    LinearConstraint pinned = c.row;
    if (sense == Sense::Maximize) {
      out.met = best.objective >= c.row.rhs;
      pinned.rhs = out.met ? c.row.rhs : best.objective - 1e-9 * std::max(1.0, std::fabs(best.objective));
    } else {
      out.met = best.objective <= c.row.rhs;
      pinned.rhs = out.met ? c.row.rhs : best.objective + 1e-9 * std::max(1.0, std::fabs(best.objective));
    }
    lp.constraints.push_back(pinned);
    if (soft_rows) soft_rows->push_back(out);
  }
  return lp;
}

ScenarioSolution solve_scenario(const MopConfig& config, const std::string& scenario) {
  const auto it = config.scenarios.find(scenario);
  if (it == config.scenarios.end()) throw UsageError("unknown scenario '" + scenario + "'");
  ScenarioSolution sol;
  sol.scenario = scenario;
  LinearProgram lp = feasible_program(config, &sol.soft_rows);
  const auto& weights = it->second.objectives;
  const std::size_t n = config.variables.size();

  if (weights.size() == 1) {
    lp.objective = config.objectives.at(weights.begin()->first);
  } else {
    lp.objective.assign(n, 0.0);
    for (const auto& [name, w] : weights) {
      LinearProgram single = lp;
      single.objective = config.objectives.at(name);
      const double opt = solve_lp(single, Sense::Maximize).objective;
      if (!(opt > 0)) throw SolverError("objective '" + name + "' has a non-positive optimum; cannot normalize");
      sol.single_optima[name] = opt;
      const auto& c = config.objectives.at(name);
      for (std::size_t j = 0; j < n; ++j) lp.objective[j] += w * c[j] / opt;
    }
  }
  const LpSolution best = solve_lp(lp, Sense::Maximize);
  sol.hectares = best.x;
  for (const auto& [name, c] : config.objectives) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) v += c[j] * best.x[j];
    sol.objective_values[name] = v;
  }
  if (weights.size() == 1) sol.single_optima[weights.begin()->first] = best.objective;
  return sol;
}

std::vector<std::int64_t> hectares_to_cells(std::span<const double> hectares, double cell_hectares,
                                            std::int64_t total_cells) {
  if (!(cell_hectares > 0)) throw UsageError("cell area must be > 0");
  if (total_cells < 0) throw UsageError("total cell count must be >= 0");
  double sum = 0.0;
  for (double h : hectares) {
    if (!(h >= 0) || !std::isfinite(h)) throw DataError("demand areas must be finite and >= 0");
    sum += h;
  }
  const std::size_t k = hectares.size();
  std::vector<std::int64_t> cells(k, 0);
  if (k == 0) return cells;
  if (!(sum > 0)) {
    if (total_cells != 0) throw DataError("all demands are zero but the grid has valid cells");
    return cells;
  }
  const double scale = static_cast<double>(total_cells) / sum;
  std::vector<double> frac(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = hectares[i] * scale;
    cells[i] = static_cast<std::int64_t>(std::floor(quota));
    frac[i] = quota - static_cast<double>(cells[i]);
    assigned += cells[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  std::int64_t remaining = total_cells - assigned;
  for (std::size_t r = 0; remaining > 0; r = (r + 1) % k, --remaining) ++cells[order[r]];
  (void)cell_hectares;
  return cells;
}

DemandSchedule DemandFile::schedule() const {
  DemandSchedule s;
  for (const auto& e : classes) s.targets[e.class_id] = e.cells;
  return s;
}

std::string demand_file_json(const DemandFile& f) {
  json j;
  j["schema_version"] = 1;
  j["scenario"] = f.scenario;
  j["cell_size"] = f.cell_size;
  j["classes"] = json::array();
  for (const auto& e : f.classes) {
    j["classes"].push_back({{"id", e.class_id}, {"name", e.name}, {"hectares", e.hectares}, {"cells", e.cells}});
  }
  return j.dump(2) + "\n";
}

DemandFile parse_demand_file(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    reject_unknown(j, {"schema_version", "scenario", "cell_size", "classes"}, "demand file");
    if (j.value("schema_version", 0) != 1) throw DataError("demand file schema_version must be 1");
    DemandFile f;
    f.scenario = j.value("scenario", "");
    f.cell_size = j.at("cell_size").get<double>();
    std::set<int> seen;
    for (const auto& e : j.at("classes")) {
      reject_unknown(e, {"id", "name", "hectares", "cells"}, "demand entry");
      DemandFile::Entry entry;
      entry.class_id = e.at("id").get<int>();
      entry.name = e.value("name", "");
      entry.hectares = e.value("hectares", 0.0);
      entry.cells = e.at("cells").get<std::int64_t>();
      if (entry.cells < 0) throw DataError("demand file: negative cell count");
      if (!seen.insert(entry.class_id).second) throw DataError("demand file: duplicate class id");
      f.classes.push_back(entry);
    }
    return f;
  } catch (const json::exception& e) {
    throw DataError(std::string("demand file: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
}

DemandFile load_demand_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open demand file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_demand_file(ss.str());
}

DemandFile baseline_demand(const CategoricalRaster& lu_t0, const CategoricalRaster& lu_t1,
                           const BaselineOptions& options) {
  if (!(options.year_t1 > options.year_t0)) throw UsageError("year_t1 must be after year_t0");
  const double interval = options.interval_years.value_or(options.year_t1 - options.year_t0);
  if (!(interval > 0)) throw UsageError("interval_years must be > 0");
  if (options.target_year < options.year_t1) throw UsageError("target year precedes year_t1");
  const MarkovMatrix m = estimate_markov(lu_t0, lu_t1, interval);
  const double cell_ha = lu_t1.geometry.cell_hectares();
  const auto counts = class_areas(lu_t1);
  std::vector<double> base(m.classes.size(), 0.0);
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto it = counts.find(m.classes[i]);
    base[i] = it == counts.end() ? 0.0 : static_cast<double>(it->second) * cell_ha;
  }
  const double offset = (options.target_year - options.year_t1) / interval;
  const int s = static_cast<int>(std::floor(offset + 1e-12));
  std::vector<double> areas;
  if (std::fabs(offset - s) <= 1e-12) {
    areas = project_markov(base, m, s);
  } else {
    const auto a = project_markov(base, m, s);
    const auto b = project_markov(base, m, s + 1);
    areas = interpolate_demand(a, options.year_t1 + s * interval, b, options.year_t1 + (s + 1) * interval,
                               options.target_year);
  }
  const auto total = static_cast<std::int64_t>(valid_cell_count(lu_t1));
  const auto cells = hectares_to_cells(areas, cell_ha, total);
  DemandFile f;
  f.scenario = "BS";
  f.cell_size = lu_t1.geometry.cell_size;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const int id = m.classes[i];
    std::string name = lu_t1.classes.contains(id) ? lu_t1.classes.at(id)
                       : lu_t0.classes.contains(id) ? lu_t0.classes.at(id) : "";
    f.classes.push_back({id, name, areas[i], cells[i]});
  }
  return f;
}

DemandFile scenario_demand(const MopConfig& config, const ScenarioSolution& solution, double cell_size,
                           std::int64_t total_cells) {
  const double cell_ha = cell_size * cell_size / 1.0e4;
  const auto cells = hectares_to_cells(solution.hectares, cell_ha, total_cells);
  DemandFile f;
  f.scenario = solution.scenario;
  f.cell_size = cell_size;
  for (std::size_t i = 0; i < config.variables.size(); ++i) {
    f.classes.push_back({config.variables[i].class_id, config.variables[i].name, solution.hectares[i], cells[i]});
  }
  std::sort(f.classes.begin(), f.classes.end(), [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  return f;
}

}  // namespace plus
