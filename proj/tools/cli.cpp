#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "curation_laws/errors.hpp"
#include "curation_laws/laws.hpp"
#include "curation_laws/parallel.hpp"
#include "curation_laws/simulator.hpp"

namespace curlaw::cli {
namespace {

constexpr std::size_t kMaxGridPoints = 100000;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kTopLevelKeys = {
    "task",   "axes",      "fixed",  "trials",  "seed",          "output",
    "tolerance", "absolute_tolerance", "rounds", "fresh_inputs_each_round", "probe", "n_test"};

const std::vector<std::string> kAxisNames = {"n",     "d",    "p",        "strategy", "rho",
                                             "rho_g", "rho_star", "lambda", "sigma",    "mode",
                                             "u",     "norm_wg"};

struct StrategySpec {
  std::string name = "all";
  std::vector<Interval> intervals;  // "intervals" only
};

struct GridPoint {
  Task task = Task::Classification;
  std::size_t n = 1000;
  std::size_t d = 200;
  double p = 1.0;
  double u = 0.5;
  StrategySpec strategy;
  double rho = 1.0;
  double rho_g = 0.0;
  double rho_star = 0.0;
  double lambda = 1e-6;
  double sigma = 0.0;
  CurationMode mode = CurationMode::LabelAgnostic;
  double norm_wg = 1.0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;

  bool is_random() const { return strategy.name == "random"; }
  double eff_rho_g() const { return is_random() ? 0.0 : rho_g; }
  double eff_rho_star() const { return is_random() ? 0.0 : rho_star; }
  GeometrySpec geometry() const { return GeometrySpec(rho, eff_rho_g(), eff_rho_star()); }

  PruningFunction pruning() const {
    const std::string& s = strategy.name;
    if (s == "keep_easy") return PruningFunction::keep_easy_fraction(p);
    if (s == "keep_hard" || s == "random") return PruningFunction::keep_hard_fraction(p);
    if (s == "qpu") return PruningFunction::qpu(p, u);
    if (s == "intervals") return PruningFunction(IntervalUnion(strategy.intervals));
    return PruningFunction::keep_all();
  }

  ExperimentConfig experiment() const {
    ExperimentConfig cfg;
    cfg.task = task;
    cfg.n = n;
    cfg.d = d;
    cfg.lambda = lambda;
    cfg.mode = mode;
    cfg.strategy = pruning();
    cfg.geometry = geometry();
    cfg.norm_wg = norm_wg;
    cfg.sigma = sigma;
    cfg.trials = trials;
    cfg.seed = seed;
    return cfg;
  }

  double phi() const { return static_cast<double>(d) / static_cast<double>(n); }
};

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError(msg); }

double as_number(const Json& v, const std::string& name) {
  if (!v.is_number()) config_fail("'" + name + "' must be a number");
  return v.get<double>();
}

std::size_t as_count(const Json& v, const std::string& name, std::size_t min) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    config_fail("'" + name + "' must be an integer");
  }
  const auto x = v.get<long long>();
  if (x < static_cast<long long>(min)) {
    config_fail("'" + name + "' must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(x);
}

double in_range(double x, double lo, double hi, const std::string& name) {
  if (std::isnan(x) || x < lo || x > hi) {
    config_fail("'" + name + "' = " + format_double(x) + " outside [" + format_double(lo) + ", " +
                format_double(hi) + "]");
  }
  return x;
}

void set_strategy(GridPoint& g, const Json& v) {
  static const std::vector<std::string> known = {"keep_easy", "keep_hard", "qpu",
                                                 "intervals", "all",       "random"};
  auto check_name = [&](const std::string& s) {
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      config_fail("unknown strategy '" + s + "'");
    }
    return s;
  };
  if (v.is_string()) {
    g.strategy.name = check_name(v.get<std::string>());
    if (g.strategy.name == "intervals") config_fail("strategy 'intervals' needs half_support");
    return;
  }
  if (!v.is_object() || !v.contains("strategy") || !v["strategy"].is_string()) {
    config_fail("strategy must be a name or an object with a 'strategy' key");
  }
  g.strategy.name = check_name(v["strategy"].get<std::string>());
  for (const auto& [key, val] : v.items()) {
    if (key == "strategy") continue;
    if (key == "p") {
      g.p = in_range(as_number(val, "p"), 0.0, 1.0, "p");
      if (g.p == 0.0) config_fail("'p' must be > 0");
    } else if (key == "u") {
      g.u = in_range(as_number(val, "u"), 0.0, 1.0, "u");
    } else if (key == "half_support") {
      if (!val.is_array()) config_fail("half_support must be a list of [lo, hi] pairs");
      std::vector<Interval> pieces;
      for (const auto& iv : val) {
        if (!iv.is_array() || iv.size() != 2) config_fail("half_support entries must be [lo, hi]");
        const double lo = as_number(iv[0], "half_support");
        const double hi = iv[1].is_string() && iv[1].get<std::string>() == "inf"
                              ? std::numeric_limits<double>::infinity()
                              : as_number(iv[1], "half_support");
        pieces.push_back({lo, hi});
      }
      try {
        IntervalUnion check(pieces);
      } catch (const InvalidArgument& e) {
        config_fail(e.what());
      }
      g.strategy.intervals = std::move(pieces);
    } else {
      config_fail("unknown strategy field '" + key + "'");
    }
  }
  if (g.strategy.name == "intervals" && g.strategy.intervals.empty()) {
    config_fail("strategy 'intervals' needs half_support");
  }
}

void set_field(GridPoint& g, const std::string& name, const Json& v) {
  if (name == "n") {
    g.n = as_count(v, name, 1);
  } else if (name == "d") {
    g.d = as_count(v, name, 4);
  } else if (name == "p") {
    g.p = in_range(as_number(v, name), 0.0, 1.0, name);
    if (g.p == 0.0) config_fail("'p' must be > 0");
  } else if (name == "u") {
    g.u = in_range(as_number(v, name), 0.0, 1.0, name);
  } else if (name == "strategy") {
    set_strategy(g, v);
  } else if (name == "rho") {
    g.rho = in_range(as_number(v, name), -1.0, 1.0, name);
  } else if (name == "rho_g") {
    g.rho_g = in_range(as_number(v, name), -1.0, 1.0, name);
  } else if (name == "rho_star") {
    g.rho_star = in_range(as_number(v, name), -1.0, 1.0, name);
  } else if (name == "lambda") {
    g.lambda = in_range(as_number(v, name), 0.0, std::numeric_limits<double>::max(), name);
  } else if (name == "sigma") {
    g.sigma = in_range(as_number(v, name), 0.0, std::numeric_limits<double>::max(), name);
  } else if (name == "norm_wg") {
    g.norm_wg = as_number(v, name);
    if (!(g.norm_wg > 0.0)) config_fail("'norm_wg' must be > 0");
  } else if (name == "mode") {
    if (!v.is_string()) config_fail("'mode' must be a string");
    try {
      g.mode = parse_curation_mode(v.get<std::string>());
    } catch (const InvalidArgument& e) {
      config_fail(e.what());
    }
  } else {
    config_fail("unknown parameter '" + name + "'");
  }
}

struct Sweep {
  std::vector<GridPoint> points;
};

Sweep expand(const Json& config) {
  for (const auto& [key, val] : config.items()) {
    if (std::find(kTopLevelKeys.begin(), kTopLevelKeys.end(), key) == kTopLevelKeys.end()) {
      config_fail("unknown config key '" + key + "'");
    }
  }
  GridPoint base;
  if (config.contains("task")) {
    if (!config["task"].is_string()) config_fail("'task' must be a string");
    try {
      base.task = parse_task(config["task"].get<std::string>());
    } catch (const InvalidArgument& e) {
      config_fail(e.what());
    }
  }
  if (config.contains("trials")) base.trials = as_count(config["trials"], "trials", 1);
  if (config.contains("seed")) {
    const Json& s = config["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      config_fail("'seed' must be a non-negative integer");
    }
    base.seed = s.get<std::uint64_t>();
  }
  if (config.contains("fixed")) {
    if (!config["fixed"].is_object()) config_fail("'fixed' must be an object");
    // strategy last so that a strategy object's own p/u win over fixed ones
    for (const auto& [key, val] : config["fixed"].items()) {
      if (key != "strategy") set_field(base, key, val);
    }
    if (config["fixed"].contains("strategy")) set_field(base, "strategy", config["fixed"]["strategy"]);
  }

  std::vector<std::pair<std::string, std::vector<Json>>> axes;
  std::size_t total = 1;
  if (config.contains("axes")) {
    if (!config["axes"].is_object()) config_fail("'axes' must be an object");
    for (const auto& [key, val] : config["axes"].items()) {
      if (std::find(kAxisNames.begin(), kAxisNames.end(), key) == kAxisNames.end()) {
        config_fail("unknown axis '" + key + "'");
      }
      if (!val.is_array() || val.empty()) config_fail("axis '" + key + "' must be a non-empty list");
      std::vector<Json> values(val.begin(), val.end());
      for (const auto& v : values) {
        GridPoint probe = base;
        set_field(probe, key, v);
      }
      total *= values.size();
      if (total > kMaxGridPoints) config_fail("grid exceeds 100000 points");
      axes.emplace_back(key, std::move(values));
    }
  }

  Sweep sweep;
  sweep.points.reserve(total);
  std::vector<std::size_t> index(axes.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    GridPoint g = base;
    for (std::size_t a = 0; a < axes.size(); ++a) set_field(g, axes[a].first, axes[a].second[index[a]]);
    sweep.points.push_back(g);
    // last axis varies fastest
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++index[a] < axes[a].second.size()) break;
      index[a] = 0;
    }
  }
  return sweep;
}

double config_double(const Json& config, const char* key, double fallback) {
  if (!config.contains(key)) return fallback;
  return as_number(config[key], key);
}

std::vector<std::string> point_columns() {
  return {"n", "d", "phi", "mode", "strategy", "p_keep", "u", "rho", "rho_g", "rho_star",
          "lambda", "sigma"};
}

// Leading cells shared by theory, simulate, compare and probe rows. p_keep is
// the kept fraction implied by the curation constants.
std::vector<Cell> point_cells(const GridPoint& g) {
  Cell p_keep;
  try {
    if (std::abs(g.eff_rho_g()) < 1.0) {
      p_keep = constants_closed_form(g.pruning(), g.mode, g.eff_rho_g()).p;
    } else {
      p_keep = g.pruning().gaussian_mass();
    }
  } catch (const std::exception&) {
  }
  Cell u;
  if (g.strategy.name == "qpu") u = g.u;
  return {static_cast<long long>(g.n), static_cast<long long>(g.d), g.phi(), to_string(g.mode),
          g.strategy.name, p_keep, u, g.rho, g.eff_rho_g(), g.eff_rho_star(), g.lambda, g.sigma};
}

template <typename F>
Table grid_table(const Sweep& sweep, std::vector<std::string> extra_columns, F&& fill) {
  Table t;
  t.columns = point_columns();
  t.columns.insert(t.columns.end(), extra_columns.begin(), extra_columns.end());
  t.columns.push_back("error");
  t.rows.resize(sweep.points.size());
  parallel_for(sweep.points.size(), [&](std::size_t k) {
    const GridPoint& g = sweep.points[k];
    std::vector<Cell> row = point_cells(g);
    std::vector<Cell> extra(extra_columns.size());
    Cell error;
    try {
      fill(g, extra);
    } catch (const std::exception& e) {
      extra.assign(extra_columns.size(), Cell{});
      error = std::string(e.what());
    }
    row.insert(row.end(), extra.begin(), extra.end());
    row.push_back(error);
    t.rows[k] = std::move(row);
  });
  return t;
}

CurationConstants point_constants(const GridPoint& g) {
  return constants(g.pruning(), g.mode, g.geometry());
}

// Theory value compared against simulation: test error or total regression error.
double theory_value(const GridPoint& g) {
  const CurationConstants c = point_constants(g);
  if (g.task == Task::Classification) {
    if (g.lambda == 0.0) return classification_error_ridgeless(g.geometry(), c, g.phi());
    return classification_error(g.geometry(), c, g.phi(), g.lambda).error;
  }
  const RegressionGeometry rg(g.norm_wg, g.rho, g.eff_rho_g(), g.eff_rho_star());
  if (g.lambda == 0.0) return regression_error_ridgeless(rg, c, g.phi(), g.sigma);
  return regression_error(rg, c, g.phi(), g.lambda, g.sigma).total;
}

Table cmd_theory(const Sweep& sweep, Task task) {
  if (task == Task::Classification) {
    return grid_table(sweep, {"m0", "nu0", "test_error"}, [](const GridPoint& g, auto& out) {
      const CurationConstants c = point_constants(g);
      if (g.lambda == 0.0) {
        out[2] = classification_error_ridgeless(g.geometry(), c, g.phi());
        return;
      }
      const auto pred = classification_error(g.geometry(), c, g.phi(), g.lambda);
      out = {pred.m0, pred.nu0, pred.error};
    });
  }
  return grid_table(sweep, {"norm_wg", "bias", "variance", "shift", "total"},
                    [](const GridPoint& g, auto& out) {
                      out[0] = g.norm_wg;
                      const CurationConstants c = point_constants(g);
                      const RegressionGeometry rg(g.norm_wg, g.rho, g.eff_rho_g(), g.eff_rho_star());
                      if (g.lambda == 0.0) {
                        out[4] = regression_error_ridgeless(rg, c, g.phi(), g.sigma);
                        return;
                      }
                      const auto pred = regression_error(rg, c, g.phi(), g.lambda, g.sigma);
                      out = {g.norm_wg, pred.bias_B, pred.variance_V, pred.shift_correction,
                             pred.total};
                    });
}

Table cmd_simulate(const Sweep& sweep) {
  return grid_table(sweep,
                    {"trials", "empirical_mean", "empirical_se", "kept_fraction", "skipped_trials"},
                    [](const GridPoint& g, auto& out) {
                      const TrialSummary s = run_trials(g.experiment());
                      out = {static_cast<long long>(g.trials), s.mean, s.std_error,
                             s.kept_fraction_mean, static_cast<long long>(s.skipped_trials)};
                    });
}

RunResult cmd_compare(const Sweep& sweep, const Json& config) {
  const double tol = config_double(config, "tolerance", 0.05);
  const double abs_tol = config_double(config, "absolute_tolerance", 1e-2);
  // Theory values below the absolute tolerance are compared on the absolute scale.
  Table t = grid_table(sweep,
                       {"theory", "empirical_mean", "empirical_se", "rel_err", "skipped_trials",
                        "comparison"},
                       [&](const GridPoint& g, auto& out) {
                         const double th = theory_value(g);
                         const TrialSummary s = run_trials(g.experiment());
                         const double diff = std::abs(s.mean - th);
                         const bool absolute = std::abs(th) < abs_tol;
                         out = {th,
                                s.mean,
                                s.std_error,
                                absolute ? diff : diff / std::abs(th),
                                static_cast<long long>(s.skipped_trials),
                                std::string(absolute ? "absolute" : "relative")};
                       });
  // The schema ends with skipped_trials; the comparison scale goes after it.
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(t.columns.begin(), t.columns.end(), name) -
                                    t.columns.begin());
  };
  const std::size_t rel_col = col("rel_err");
  const std::size_t cmp_col = col("comparison");
  const std::size_t err_col = col("error");

  std::vector<double> rels;
  double max_rel = 0.0;
  std::size_t failing = 0;
  std::size_t errored = 0;
  for (const auto& row : t.rows) {
    if (!std::holds_alternative<std::monostate>(row[err_col])) {
      ++errored;
      continue;
    }
    const double e = std::get<double>(row[rel_col]);
    const bool absolute = std::get<std::string>(row[cmp_col]) == "absolute";
    if (absolute) {
      if (e > abs_tol) ++failing;
    } else {
      rels.push_back(e);
      max_rel = std::max(max_rel, e);
      if (e > tol) ++failing;
    }
  }
  double mean_rel = 0.0;
  for (double r : rels) mean_rel += r;
  if (!rels.empty()) mean_rel /= static_cast<double>(rels.size());
  std::ostringstream s;
  s << "summary: points=" << t.rows.size() << " mean_rel_err=" << format_double(mean_rel)
    << " max_rel_err=" << format_double(max_rel) << " tolerance=" << format_double(tol)
    << " failing=" << failing << " errored=" << errored;
  t.trailer.push_back(s.str());
  int code = failing > 0 ? kToleranceExceeded : kOk;
  if (errored > 0 && errored == t.rows.size()) code = kRuntimeFailure;
  return {std::move(t), code};
}

Table cmd_lens(const Sweep& sweep) {
  Table t;
  t.columns = {"p", "gamma_min", "gamma_max", "gamma_u0", "gamma_u25", "gamma_u50", "gamma_u75",
               "gamma_u100", "error"};
  for (const GridPoint& g : sweep.points) {
    std::vector<Cell> row(t.columns.size());
    row[0] = g.p;
    try {
      const LensBounds b = gamma_bounds(g.p);
      row[1] = b.gamma_min;
      row[2] = b.gamma_max;
      const double us[] = {0.0, 0.25, 0.5, 0.75, 1.0};
      for (int i = 0; i < 5; ++i) row[3 + i] = qpu_gamma(g.p, us[i]);
    } catch (const std::exception& e) {
      row.back() = std::string(e.what());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table cmd_collapse(const Sweep& sweep, const Json& config) {
  if (sweep.points.size() != 1 || (config.contains("axes") && !config["axes"].empty())) {
    config_fail("collapse takes a single point: use 'fixed', not 'axes'");
  }
  const GridPoint& g = sweep.points.front();
  if (g.task != Task::Classification) config_fail("collapse needs task 'classification'");
  std::size_t rounds = 20;
  if (config.contains("rounds")) rounds = as_count(config["rounds"], "rounds", 0);
  if (rounds > 1000) config_fail("'rounds' must be <= 1000");
  bool fresh = true;
  if (config.contains("fresh_inputs_each_round")) {
    if (!config["fresh_inputs_each_round"].is_boolean()) {
      config_fail("'fresh_inputs_each_round' must be a boolean");
    }
    fresh = config["fresh_inputs_each_round"].get<bool>();
  }

  Table t;
  t.columns = {"repeat",          "round",       "error_uncurated", "error_curated",
               "rho_uncurated",   "rho_curated", "kept_fraction",   "error"};
  if (rounds == 0) return t;

  CollapseConfig cc;
  cc.base = g.experiment();
  cc.rounds = rounds;
  cc.fresh_inputs_each_round = fresh;
  std::vector<std::pair<CollapseSeries, CollapseSeries>> arms(g.trials);
  parallel_for(g.trials, [&](std::size_t k) {
    CollapseConfig plain = cc;
    plain.curate_each_round = false;
    CollapseConfig curated = cc;
    curated.curate_each_round = true;
    arms[k] = {collapse_loop(plain, k), collapse_loop(curated, k)};
  });

  std::size_t wins = 0;
  std::size_t complete = 0;
  for (std::size_t k = 0; k < arms.size(); ++k) {
    const auto& [plain, curated] = arms[k];
    for (std::size_t r = 0; r < rounds; ++r) {
      std::vector<Cell> row(t.columns.size());
      row[0] = static_cast<long long>(k);
      row[1] = static_cast<long long>(r);
      if (r < plain.rounds.size()) {
        row[2] = plain.rounds[r].error;
        row[4] = plain.rounds[r].rho;
      }
      if (r < curated.rounds.size()) {
        row[3] = curated.rounds[r].error;
        row[5] = curated.rounds[r].rho;
        row[6] = curated.rounds[r].kept_fraction;
      }
      std::string why;
      if (r >= plain.rounds.size()) why = "uncurated: " + plain.halt_reason;
      if (r >= curated.rounds.size()) why += (why.empty() ? "" : "; ") + ("curated: " + curated.halt_reason);
      if (!why.empty()) row[7] = why;
      t.rows.push_back(std::move(row));
    }
    if (plain.rounds.size() == rounds && curated.rounds.size() == rounds) {
      ++complete;
      if (curated.rounds.back().error <= plain.rounds.back().error) ++wins;
    }
  }
  t.trailer.push_back("summary: curated_final_le_uncurated=" + std::to_string(wins) + "/" +
                      std::to_string(complete));
  return t;
}

Table cmd_probe(const Sweep& sweep, const Json& config) {
  std::string kind = "resolvent";
  if (config.contains("probe")) {
    if (!config["probe"].is_string()) config_fail("'probe' must be a string");
    kind = config["probe"].get<std::string>();
  }
  if (kind == "resolvent") {
    return grid_table(sweep,
                      {"trials", "m", "m_tilde", "s", "trace", "parallel", "perp", "trace_gap",
                       "parallel_gap", "parallel_gap_s", "perp_gap"},
                      [](const GridPoint& g, auto& out) {
                        const ResolventProbe r = resolvent_probe(g.experiment());
                        out = {static_cast<long long>(g.trials), r.m, r.m_tilde, r.s, r.trace,
                               r.parallel, r.perp, r.trace_gap, r.parallel_gap, r.parallel_gap_s,
                               r.perp_gap};
                      });
  }
  if (kind == "margin") {
    std::size_t n_test = 100000;
    if (config.contains("n_test")) n_test = as_count(config["n_test"], "n_test", 2);
    return grid_table(
        sweep,
        {"trials", "first_moment", "first_se", "second_moment", "second_se", "implied_first",
         "implied_second", "theory_first", "theory_second", "max_trial_z"},
        [n_test](const GridPoint& g, auto& out) {
          const MarginProbe m = margin_probe(g.experiment(), n_test);
          const CurationConstants c = point_constants(g);
          const auto pred = classification_error(g.geometry(), c, g.phi(), g.lambda);
          const double delta = g.phi() * stieltjes_m(c.p, g.phi(), g.lambda);
          out = {static_cast<long long>(g.trials), m.first_moment, m.first_se, m.second_moment,
                 m.second_se, m.implied_first, m.implied_second,
                 std::abs(pred.m0) / (1.0 + delta) * std::sqrt(2.0 / std::numbers::pi),
                 pred.nu0 / ((1.0 + delta) * (1.0 + delta)), m.max_trial_z};
        });
  }
  config_fail("unknown probe '" + kind + "' (expected resolvent or margin)");
}

std::string csv_field(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) {
            if (ch == '"') q += '"';
            q += ch;
          }
          return q + "\"";
        }
      },
      c);
}

Json json_field(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      c);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json merged_config(const Json& file_config, const Overrides& o) {
  if (!file_config.is_object()) throw ConfigError("config must be a JSON object");
  Json merged = file_config;
  if (o.seed) merged["seed"] = *o.seed;
  if (o.trials) merged["trials"] = *o.trials;
  if (o.out) merged["output"] = *o.out;
  if (o.tolerance) merged["tolerance"] = *o.tolerance;
  return merged;
}

RunResult run_command(const std::string& command, const Json& config) {
  const Sweep sweep = expand(config);
  const Task task = sweep.points.empty() ? Task::Classification : sweep.points.front().task;
  if (command == "theory") return {cmd_theory(sweep, task), kOk};
  if (command == "simulate") return {cmd_simulate(sweep), kOk};
  if (command == "compare") return cmd_compare(sweep, config);
  if (command == "lens") return {cmd_lens(sweep), kOk};
  if (command == "collapse") return {cmd_collapse(sweep, config), kOk};
  if (command == "probe") return {cmd_probe(sweep, config), kOk};
  throw ConfigError("unknown command '" + command + "'");
}

void write_table(std::ostream& os, const Table& table, const Json& config, bool jsonl) {
  if (jsonl) {
    os << Json{{"config", config}}.dump() << '\n';
    for (const auto& row : table.rows) {
      Json obj = Json::object();
      for (std::size_t i = 0; i < table.columns.size(); ++i) obj[table.columns[i]] = json_field(row[i]);
      os << obj.dump() << '\n';
    }
    for (const auto& line : table.trailer) os << Json{{"summary", line}}.dump() << '\n';
    return;
  }
  os << "# config: " << config.dump() << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << '\n';
  }
  for (const auto& line : table.trailer) os << "# " << line << '\n';
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Theory and simulation sweeps for curated ridge learning"};
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::string out;
  double tolerance = 0.0;
  app.add_option("command", command, "theory | simulate | compare | collapse | lens | probe")
      ->required()
      ->check(CLI::IsMember({"theory", "simulate", "compare", "collapse", "lens", "probe"}));
  app.add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override config seed");
  auto* trials_opt = app.add_option("--trials", trials, "override config trials")
                         ->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "output file (.csv or .jsonl)");
  auto* tol_opt = app.add_option("--tolerance", tolerance, "compare: max relative error");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
    Json file_config;
    try {
      file_config = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Overrides o;
    if (*seed_opt) o.seed = seed;
    if (*trials_opt) o.trials = trials;
    if (*out_opt) o.out = out;
    if (*tol_opt) o.tolerance = tolerance;
    const Json config = merged_config(file_config, o);

    const RunResult result = run_command(command, config);
    if (config.contains("output")) {
      if (!config["output"].is_string()) throw ConfigError("'output' must be a path string");
      const std::string path = config["output"].get<std::string>();
      const bool jsonl = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl";
      std::ofstream file(path, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write '" + path + "'");
      write_table(file, result.table, config, jsonl);
    } else {
      write_table(std::cout, result.table, config, false);
    }
    for (const auto& line : result.table.trailer) std::cerr << line << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleGeometry& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace curlaw::cli
