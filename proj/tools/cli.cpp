#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "plus/cars.hpp"
#include "plus/demand.hpp"
#include "plus/errors.hpp"
#include "plus/leas.hpp"
#include "plus/parallel.hpp"
#include "plus/raster.hpp"
#include "plus/text.hpp"
#include "plus/validate.hpp"

#ifndef PLUS_VERSION
#define PLUS_VERSION "0.0.0"
#endif

namespace plus::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string digest(const fs::path& path) { return hex64(fnv1a64(read_file(path))); }

std::string default_text(const json& v) {
  if (v.is_null()) return "auto";
  if (v.is_string()) return v.get<std::string>().empty() ? "none" : v.get<std::string>();
  if (v.is_array() && v.empty()) return "all";
  return v.dump();
}

// One subcommand: defaults, flags that override them, optional config file.
struct Command {
  std::string name;
  json defaults;
  std::vector<std::function<void(json&)>> overrides;
  std::string config_path;
  CLI::App* app = nullptr;

  template <class T>
  CLI::Option* bind(const std::string& flag, const std::string& key, const std::string& desc,
                    const std::string& shown = {}) {
    auto store = std::make_shared<T>();
    const std::string def = shown.empty() ? default_text(defaults.at(key)) : shown;
    CLI::Option* opt = app->add_option(flag, *store, desc + " [default: " + def + "]");
    overrides.push_back([opt, store, key](json& j) {
      if (opt->count() > 0) j[key] = *store;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& flag, const std::string& key, bool value, const std::string& desc) {
    CLI::Option* opt = app->add_flag(flag, desc);
    overrides.push_back([opt, key, value](json& j) {
      if (opt->count() > 0) j[key] = value;
    });
    return opt;
  }

  json resolve() const {
    json cfg = defaults;
    if (!config_path.empty()) {
      json file;
      try {
        file = json::parse(read_file(config_path));
      } catch (const json::parse_error& e) {
        throw UsageError("config " + config_path + " is not valid JSON: " + e.what());
      }
      if (!file.is_object()) throw UsageError("config " + config_path + " must be a JSON object");
      if (file.contains("command") && file.contains("config")) {
        if (file["command"] != name)
          throw UsageError("manifest " + config_path + " was written by '" + file["command"].get<std::string>() +
                           "', not '" + name + "'");
        file = file["config"];
      }
      for (auto it = file.begin(); it != file.end(); ++it) {
        if (!defaults.contains(it.key())) throw UsageError("unknown config key '" + it.key() + "' for " + name);
        cfg[it.key()] = it.value();
      }
      if (cfg["schema_version"] != 1) throw UsageError("config schema_version must be 1");
    }
    for (const auto& o : overrides) o(cfg);
    return cfg;
  }
};

template <class T>
T get(const json& cfg, const std::string& key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

std::string required_path(const json& cfg, const std::string& key) {
  auto v = get<std::string>(cfg, key);
  if (v.empty()) throw UsageError("missing required option --" + key);
  return v;
}

template <class T>
std::optional<T> get_optional(const json& cfg, const std::string& key) {
  if (cfg.at(key).is_null()) return std::nullopt;
  return get<T>(cfg, key);
}

// "name=path" or a bare path named after its stem.
std::pair<std::string, std::string> named_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw UsageError("expected name=path, got '" + spec + "'");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Manifest {
public:
  Manifest(const std::string& command, const json& config) {
    m_["tool"] = "plus";
    m_["version"] = PLUS_VERSION;
    m_["command"] = command;
    m_["config"] = config;
    m_["config_hash"] = hex64(fnv1a64(config.dump()));
    if (config.contains("seed")) m_["seed"] = config["seed"];
    m_["inputs"] = json::object();
    m_["outputs"] = json::object();
    m_["timings_s"] = json::object();
  }
  void input(const fs::path& p) { m_["inputs"][p.string()] = digest(p); }
  void output(const fs::path& p) { m_["outputs"][p.string()] = digest(p); }
  void timing(const std::string& stage, double s) { m_["timings_s"][stage] = s; }
  json& results() { return m_["results"]; }
  void write(const fs::path& p) const { write_file(p, m_.dump(2) + "\n"); }

private:
  json m_;
};

CategoricalRaster load_input_raster(const std::string& path, Manifest& manifest) {
  auto r = load_categorical(path);
  manifest.input(path);
  if (fs::exists(legend_path(path))) manifest.input(legend_path(path));
  return r;
}

// ---- mine ----

int run_mine(const json& cfg, std::ostream& out, std::ostream& err) {
  Manifest manifest("mine", cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto t0 = load_input_raster(required_path(cfg, "t0"), manifest);
  const auto t1 = load_input_raster(required_path(cfg, "t1"), manifest);
  const auto factor_specs = get<std::vector<std::string>>(cfg, "factors");
  if (factor_specs.empty()) throw UsageError("missing required option --factor");
  FactorStack factors;
  std::vector<NamedGeometry> geoms{{"t0", t0.geometry}, {"t1", t1.geometry}};
  for (const auto& spec : factor_specs) {
    const auto [name, path] = named_path(spec);
    ContinuousRaster layer;
    try {
      layer = load_continuous(path);
    } catch (const DataError& e) {
      throw DataError("factor '" + name + "': " + e.what());
    }
    manifest.input(path);
    geoms.push_back({"factor '" + name + "'", layer.geometry});
    assert_aligned(geoms);
    factors.add(name, std::move(layer));
  }
  auto classes = get<std::vector<int>>(cfg, "classes");
  if (classes.empty()) {
    std::set<int> ids;
    for (const auto& [id, n] : t0.classes) ids.insert(id);
    for (const auto& [id, n] : t1.classes) ids.insert(id);
    classes.assign(ids.begin(), ids.end());
  }
  MiningOptions opts;
  opts.forest.trees = get<int>(cfg, "trees");
  opts.forest.mtry = get<int>(cfg, "mtry");
  opts.forest.max_depth = get<int>(cfg, "max_depth");
  opts.forest.min_samples_split = get<int>(cfg, "min_samples_split");
  opts.sampling.rate = get<double>(cfg, "rate");
  opts.sampling.balanced = get<bool>(cfg, "balanced");
  opts.master_seed = get<std::uint64_t>(cfg, "seed");
  opts.threads = get<int>(cfg, "threads");
  opts.forest.threads = opts.threads;
  manifest.timing("load", seconds_since(start));

  const auto t_mine = std::chrono::steady_clock::now();
  MiningReport report;
  const auto set = mine_growth_surfaces(t0, t1, factors, classes, opts, &report);
  manifest.timing("mine", seconds_since(t_mine));

  const fs::path dir = required_path(cfg, "out");
  save_growth_surfaces(set, dir);
  for (const auto& s : set.surfaces) manifest.output(growth_surface_path(dir, s.class_id));
  manifest.output(dir / "importance.csv");
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  manifest.results() = {{"forests_trained", report.forests_trained}, {"warnings", report.warnings}};
  manifest.timing("total", seconds_since(start));
  manifest.write(dir / "manifest.json");
  out << "mined " << set.surfaces.size() << " classes (" << report.forests_trained << " forests) into "
      << dir.string() << "\n";
  return 0;
}

// ---- demand ----

fs::path sibling_manifest(const fs::path& file) {
  return file.parent_path() / (file.stem().string() + ".manifest.json");
}

int run_demand(const json& cfg, std::ostream& out, std::ostream&) {
  const auto scenario = get<std::string>(cfg, "scenario");
  if (scenario.empty()) throw UsageError("missing required option --scenario");
  Manifest manifest("demand", cfg);
  const auto start = std::chrono::steady_clock::now();
  DemandFile file;
  if (scenario == "BS") {
    const auto t0 = load_input_raster(required_path(cfg, "t0"), manifest);
    const auto t1 = load_input_raster(required_path(cfg, "t1"), manifest);
    BaselineOptions b;
    b.year_t0 = get<double>(cfg, "year_t0");
    b.year_t1 = get<double>(cfg, "year_t1");
    b.interval_years = get_optional<double>(cfg, "interval_years");
    b.target_year = get<double>(cfg, "target_year");
    file = baseline_demand(t0, t1, b);
  } else {
    const auto config_path = get<std::string>(cfg, "mop_config");
    MopConfig mop = config_path.empty() ? parse_mop_config(default_mop_config_json()) : load_mop_config(config_path);
    if (!config_path.empty()) manifest.input(config_path);
    if (!mop.scenarios.contains(scenario)) {
      std::string known = "BS";
      for (const auto& [name, w] : mop.scenarios) known += ", " + name;
      throw UsageError("unknown scenario '" + scenario + "' (expected one of " + known + ")");
    }
    double cell_size = get<double>(cfg, "cell_size");
    std::int64_t total_cells = 0;
    if (const auto raster = get<std::string>(cfg, "raster"); !raster.empty()) {
      const auto r = load_input_raster(raster, manifest);
      cell_size = r.geometry.cell_size;
      total_cells = static_cast<std::int64_t>(valid_cell_count(r));
    } else if (const auto t = get_optional<std::int64_t>(cfg, "total_cells")) {
      total_cells = *t;
    } else {
      if (!(cell_size > 0)) throw UsageError("cell_size must be > 0");
      total_cells = std::llround(mop.total_area / (cell_size * cell_size / 1.0e4));
    }
    const auto sol = solve_scenario(mop, scenario);
    file = scenario_demand(mop, sol, cell_size, total_cells);
    json res;
    res["objective_values"] = sol.objective_values;
    res["single_optima"] = sol.single_optima;
    res["soft_rows"] = json::array();
    for (const auto& s : sol.soft_rows)
      res["soft_rows"].push_back({{"name", s.name}, {"target", s.target}, {"attained", s.attained}, {"met", s.met}});
    manifest.results() = res;
    for (const auto& s : sol.soft_rows) {
      if (!s.met)
        out << "soft row '" << s.name << "' not attainable: target " << format_double(s.target) << ", best "
            << format_double(s.attained) << "\n";
    }
    for (const auto& [name, v] : sol.objective_values) out << name << " = " << format_double(v) << "\n";
  }
  manifest.timing("total", seconds_since(start));
  const fs::path path = required_path(cfg, "out");
  write_file(path, demand_file_json(file));
  manifest.output(path);
  manifest.write(sibling_manifest(path));
  out << "scenario " << file.scenario << "\nclass,name,hectares,cells\n";
  for (const auto& e : file.classes) {
    std::ostringstream ha;
    ha.setf(std::ios::fixed);
    ha.precision(2);
    ha << e.hectares;
    out << e.class_id << ',' << e.name << ',' << ha.str() << ',' << e.cells << "\n";
  }
  return 0;
}

// ---- simulate ----

int run_simulate(const json& cfg, std::ostream& out, std::ostream& err) {
  Manifest manifest("simulate", cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto initial = load_input_raster(required_path(cfg, "initial"), manifest);

  DemandSchedule demand;
  const auto demand_path = get<std::string>(cfg, "demand");
  std::map<int, std::string> names;
  if (!cfg.at("demands").is_null()) {
    if (!demand_path.empty()) throw UsageError("give either --demand or a 'demands' table, not both");
    for (auto it = cfg["demands"].begin(); it != cfg["demands"].end(); ++it) {
      const auto id = parse_double(it.key());
      if (!id || *id != static_cast<int>(*id)) throw UsageError("demands keys must be class ids");
      try {
        demand.targets[static_cast<int>(*id)] = it.value().get<std::int64_t>();
      } catch (const json::exception&) {
        throw UsageError("demands values must be integer cell counts");
      }
    }
  } else {
    if (demand_path.empty()) throw UsageError("missing required option --demand");
    const auto file = load_demand_file(demand_path);
    manifest.input(demand_path);
    demand = file.schedule();
    for (const auto& e : file.classes) names[e.class_id] = e.name;
  }

  SimulationConfig sc;
  sc.classes = get<std::vector<int>>(cfg, "classes");
  if (sc.classes.empty()) {
    for (const auto& [id, n] : demand.targets) sc.classes.push_back(id);
  }
  const std::size_t k = sc.classes.size();
  sc.window = get<int>(cfg, "window");
  sc.weights = get<std::vector<double>>(cfg, "weights");
  if (cfg.at("mu").is_number()) sc.mu.assign(k, get<double>(cfg, "mu"));
  else sc.mu = get<std::vector<double>>(cfg, "mu");
  sc.delta = get<double>(cfg, "delta");
  sc.step = get<std::int64_t>(cfg, "step");
  sc.max_iterations = get<int>(cfg, "max_iterations");
  sc.tolerance = get_optional<double>(cfg, "tolerance");
  sc.seed = get<std::uint64_t>(cfg, "seed");
  sc.patch_seeding = get<bool>(cfg, "patch_seeding");
  sc.threads = get<int>(cfg, "threads");
  if (!cfg.at("tm").is_null()) {
    const auto rows = get<std::vector<std::vector<int>>>(cfg, "tm");
    std::vector<std::uint8_t> flat;
    for (const auto& row : rows) {
      if (row.size() != rows.size()) throw UsageError("tm must be square");
      for (int v : row) {
        if (v != 0 && v != 1) throw UsageError("tm entries must be 0 or 1");
        flat.push_back(static_cast<std::uint8_t>(v));
      }
    }
    sc.tm = TransitionMatrix(rows.size(), std::move(flat));
  }
  sc.demand = demand;
  sc.validate();

  const fs::path surf_dir = required_path(cfg, "surfaces");
  const auto surfaces = load_growth_surfaces(surf_dir, sc.classes);
  for (int id : sc.classes) manifest.input(growth_surface_path(surf_dir, id));
  manifest.timing("load", seconds_since(start));

  const auto t_sim = std::chrono::steady_clock::now();
  auto result = simulate(initial, surfaces, sc);
  manifest.timing("simulate", seconds_since(t_sim));
  for (const auto& [id, name] : names) {
    if (!result.final_raster.classes.contains(id) && !name.empty()) result.final_raster.classes[id] = name;
  }

  const fs::path dir = required_path(cfg, "out");
  fs::create_directories(dir);
  save_ascii_grid(result.final_raster, dir / "final.asc");
  write_file(dir / "trace.csv", trace_csv(result, sc.classes));
  write_file(dir / "changes.csv", change_log_csv(result));
  for (const auto* f : {"final.asc", "trace.csv", "changes.csv"}) manifest.output(dir / f);
  manifest.output(legend_path(dir / "final.asc"));
  manifest.results() = {{"converged", result.converged}, {"iterations", result.iterations},
                        {"changes", result.changes.size()}};
  manifest.timing("total", seconds_since(start));
  manifest.write(dir / "manifest.json");
  if (!result.converged) err << "warning: demand not met within " << sc.max_iterations << " iterations\n";
  out << (result.converged ? "converged" : "not converged") << " after " << result.iterations << " iterations, "
      << result.changes.size() << " cell changes\n";
  return 0;
}

// ---- validate / metrics ----

int run_validate(const json& cfg, std::ostream& out, std::ostream&) {
  Manifest manifest("validate", cfg);
  const auto start = std::chrono::steady_clock::now();
  const int conn = get<int>(cfg, "connectivity");
  const fs::path dir = required_path(cfg, "out");
  fs::create_directories(dir);

  if (get<bool>(cfg, "metrics_only")) {
    auto path = get<std::string>(cfg, "raster");
    if (path.empty()) path = get<std::string>(cfg, "t1");
    if (path.empty()) throw UsageError("--metrics-only needs --raster");
    const auto r = load_input_raster(path, manifest);
    const auto csv = metrics_csv(landscape_metrics(r, conn));
    write_file(dir / "metrics.csv", csv);
    manifest.output(dir / "metrics.csv");
    manifest.timing("total", seconds_since(start));
    manifest.write(dir / "manifest.json");
    out << csv;
    return 0;
  }

  const auto t0 = load_input_raster(required_path(cfg, "t0"), manifest);
  const auto t1 = load_input_raster(required_path(cfg, "t1"), manifest);
  const auto sim_specs = get<std::vector<std::string>>(cfg, "sims");
  if (sim_specs.empty()) throw UsageError("missing required option --sim");
  std::vector<std::pair<std::string, CategoricalRaster>> sims;
  std::vector<NamedGeometry> geoms{{"observed t0", t0.geometry}, {"observed t1", t1.geometry}};
  for (const auto& spec : sim_specs) {
    const auto [name, path] = named_path(spec);
    sims.emplace_back(name, load_input_raster(path, manifest));
    geoms.push_back({"simulation '" + name + "'", sims.back().second.geometry});
  }
  assert_aligned(geoms);

  std::vector<std::pair<std::string, FomResult>> foms;
  std::vector<std::pair<std::string, MetricsReport>> reports;
  const MetricsReport observed = landscape_metrics(t1, conn);
  reports.emplace_back("observed", observed);
  for (const auto& [name, r] : sims) {
    foms.emplace_back(name, figure_of_merit(t0, t1, r));
    reports.emplace_back(name, landscape_metrics(r, conn));
  }
  const std::vector<std::pair<std::string, MetricsReport>> candidates(reports.begin() + 1, reports.end());
  const auto table = compare_reports(observed, candidates);
  write_file(dir / "fom.csv", fom_csv(foms));
  write_file(dir / "metrics.csv", metrics_table_csv(reports));
  write_file(dir / "comparison.csv", comparison_csv(table));
  for (const auto* f : {"fom.csv", "metrics.csv", "comparison.csv"}) manifest.output(dir / f);
  json res = json::object();
  for (const auto& [name, f] : foms) res["fom"][name] = f.fom;
  manifest.results() = res;
  manifest.timing("total", seconds_since(start));
  manifest.write(dir / "manifest.json");
  for (const auto& [name, f] : foms) {
    out << "FOM " << name << " = " << format_double(f.fom) << " (A=" << f.a << " B=" << f.b << " C=" << f.c
        << " D=" << f.d << ")\n";
  }
  for (std::size_t k = 0; k < table.candidates.size(); ++k)
    out << table.candidates[k] << " closest on " << table.first_closest[k] << " of " << kMetricCount << " metrics\n";
  return 0;
}

int run_metrics(const json& cfg, std::ostream& out, std::ostream&) {
  Manifest manifest("metrics", cfg);
  const auto start = std::chrono::steady_clock::now();
  const int conn = get<int>(cfg, "connectivity");
  const auto reference = load_input_raster(required_path(cfg, "raster"), manifest);
  const fs::path dir = required_path(cfg, "out");
  fs::create_directories(dir);
  const MetricsReport rep = landscape_metrics(reference, conn);
  write_file(dir / "metrics.csv", metrics_csv(rep));
  manifest.output(dir / "metrics.csv");
  out << metrics_csv(rep);
  const auto specs = get<std::vector<std::string>>(cfg, "candidates");
  if (!specs.empty()) {
    std::vector<std::pair<std::string, MetricsReport>> cands;
    std::vector<std::pair<std::string, MetricsReport>> all{{"reference", rep}};
    for (const auto& spec : specs) {
      const auto [name, path] = named_path(spec);
      const auto r = load_input_raster(path, manifest);
      const NamedGeometry g[2] = {{"reference", reference.geometry}, {"candidate '" + name + "'", r.geometry}};
      assert_aligned(g);
      cands.emplace_back(name, landscape_metrics(r, conn));
      all.push_back(cands.back());
    }
    write_file(dir / "metrics_table.csv", metrics_table_csv(all));
    write_file(dir / "comparison.csv", comparison_csv(compare_reports(rep, cands)));
    manifest.output(dir / "metrics_table.csv");
    manifest.output(dir / "comparison.csv");
  }
  manifest.timing("total", seconds_since(start));
  manifest.write(dir / "manifest.json");
  return 0;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PLUS land-use change simulation"};
  app.set_version_flag("--version", PLUS_VERSION);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& desc, json defaults) -> Command& {
    auto c = std::make_unique<Command>();
    c->name = name;
    c->defaults = std::move(defaults);
    c->defaults["schema_version"] = 1;
    c->app = app.add_subcommand(name, desc);
    c->app->add_option("--config", c->config_path, "JSON config or a run manifest to replay");
    commands.push_back(std::move(c));
    return *commands.back();
  };

  auto& mine = make("mine", "mine growth-probability surfaces with per-class random forests",
                    {{"t0", ""}, {"t1", ""}, {"factors", json::array()}, {"classes", json::array()},
                     {"rate", 0.05}, {"balanced", false}, {"trees", 50}, {"mtry", 0}, {"max_depth", 0},
                     {"min_samples_split", 2}, {"seed", 0}, {"threads", 0}, {"out", ""}});
  mine.bind<std::string>("--t0", "t0", "land use at the first date");
  mine.bind<std::string>("--t1", "t1", "land use at the second date");
  mine.bind<std::vector<std::string>>("--factor", "factors", "driving factor, name=path (repeatable)", "none");
  mine.bind<std::vector<int>>("--classes", "classes", "class ids to mine, comma separated")->delimiter(',');
  mine.bind<double>("--rate", "rate", "sampling rate");
  mine.flag("--balanced", "balanced", true, "downsample the majority label");
  mine.bind<int>("--trees", "trees", "trees per forest");
  mine.bind<int>("--mtry", "mtry", "features tried per split, 0 = ceil(sqrt(F))");
  mine.bind<int>("--max-depth", "max_depth", "tree depth limit, 0 = none");
  mine.bind<int>("--min-samples-split", "min_samples_split", "smallest node that may split");
  mine.bind<std::uint64_t>("--seed", "seed", "master seed");
  mine.bind<int>("--threads", "threads", "worker cap, 0 = all cores");
  mine.bind<std::string>("--out", "out", "output directory");

  auto& demand = make("demand", "compute a land-use demand file for a scenario (BS, ED, EP, SD)",
                      {{"scenario", ""}, {"out", ""}, {"t0", ""}, {"t1", ""}, {"year_t0", 2003.0},
                       {"year_t1", 2013.0}, {"interval_years", nullptr}, {"target_year", 2035.0},
                       {"mop_config", ""}, {"raster", ""}, {"cell_size", 30.0}, {"total_cells", nullptr}});
  demand.bind<std::string>("--scenario", "scenario", "BS (Markov baseline) or a scenario of the MOP config");
  demand.bind<std::string>("--out", "out", "demand file to write");
  demand.bind<std::string>("--t0", "t0", "BS: land use at year_t0");
  demand.bind<std::string>("--t1", "t1", "BS: land use at year_t1");
  demand.bind<double>("--year-t0", "year_t0", "BS: year of t0");
  demand.bind<double>("--year-t1", "year_t1", "BS: year of t1");
  demand.bind<double>("--interval-years", "interval_years", "BS: years per Markov step (auto = year_t1 - year_t0)");
  demand.bind<double>("--target-year", "target_year", "BS: year to project to");
  demand.bind<std::string>("--mop-config", "mop_config", "scenario config JSON (none = built-in)");
  demand.bind<std::string>("--raster", "raster", "MOP: grid giving cell size and valid-cell total");
  demand.bind<double>("--cell-size", "cell_size", "MOP: cell size in metres when no raster is given");
  demand.bind<std::int64_t>("--total-cells", "total_cells", "MOP: valid-cell total (auto = total area / cell area)");

  auto& sim = make("simulate", "run the patch-seeded CA to the demand",
                   {{"initial", ""}, {"surfaces", ""}, {"demand", ""}, {"demands", nullptr}, {"out", ""},
                    {"classes", json::array()}, {"window", 3}, {"weights", json::array()}, {"mu", 0.1},
                    {"delta", 0.9}, {"step", 500}, {"max_iterations", 1000}, {"tolerance", nullptr}, {"seed", 0},
                    {"patch_seeding", true}, {"tm", nullptr}, {"threads", 0}});
  sim.bind<std::string>("--initial", "initial", "initial land use");
  sim.bind<std::string>("--surfaces", "surfaces", "directory of growth_k<id>.asc");
  sim.bind<std::string>("--demand", "demand", "demand file");
  sim.bind<std::string>("--out", "out", "output directory");
  sim.bind<std::vector<int>>("--classes", "classes", "class order, comma separated (all = demand classes)")
      ->delimiter(',');
  sim.bind<int>("--window", "window", "neighbourhood edge length");
  sim.bind<std::vector<double>>("--weights", "weights", "neighbourhood weight per class")->delimiter(',');
  sim.bind<double>("--mu", "mu", "patch-seed threshold for every class");
  sim.bind<double>("--delta", "delta", "threshold decay factor");
  sim.bind<std::int64_t>("--step", "step", "expected cells of progress per iteration");
  sim.bind<int>("--max-iterations", "max_iterations", "iteration cap");
  sim.bind<double>("--tolerance", "tolerance", "cells per class (auto = step / 2)");
  sim.bind<std::uint64_t>("--seed", "seed", "master seed");
  sim.flag("--no-patch-seeding", "patch_seeding", false, "disable random patch seeds");
  sim.bind<int>("--threads", "threads", "worker cap, 0 = all cores");

  auto& val = make("validate", "figure of merit and landscape metrics against observed land use",
                   {{"t0", ""}, {"t1", ""}, {"sims", json::array()}, {"raster", ""}, {"metrics_only", false},
                    {"connectivity", 8}, {"out", ""}});
  val.bind<std::string>("--t0", "t0", "observed land use at the start date");
  val.bind<std::string>("--t1", "t1", "observed land use at the end date");
  val.bind<std::vector<std::string>>("--sim", "sims", "simulated end-date land use, name=path (repeatable)", "none");
  val.bind<std::string>("--raster", "raster", "raster for --metrics-only");
  val.flag("--metrics-only", "metrics_only", true, "only write the metrics of one raster");
  val.bind<int>("--connectivity", "connectivity", "patch connectivity, 4 or 8");
  val.bind<std::string>("--out", "out", "output directory");

  auto& met = make("metrics", "landscape metrics of a raster, optionally ranked against candidates",
                   {{"raster", ""}, {"candidates", json::array()}, {"connectivity", 8}, {"out", ""}});
  met.bind<std::string>("--raster", "raster", "reference raster");
  met.bind<std::vector<std::string>>("--candidate", "candidates", "raster to compare, name=path (repeatable)", "none");
  met.bind<int>("--connectivity", "connectivity", "patch connectivity, 4 or 8");
  met.bind<std::string>("--out", "out", "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  using Runner = int (*)(const json&, std::ostream&, std::ostream&);
  const std::map<std::string, Runner> runners{{"mine", run_mine},
                                              {"demand", run_demand},
                                              {"simulate", run_simulate},
                                              {"validate", run_validate},
                                              {"metrics", run_metrics}};
  for (const auto& c : commands) {
    if (c->app->parsed()) return runners.at(c->name)(c->resolve(), out, err);
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(argc, argv, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"plus"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace plus::cli
