#include "mvrff/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "mvrff/csv.hpp"
#include "mvrff/optimizer.hpp"
#include "mvrff/simdata.hpp"

namespace mvrff {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

bool parse_int(const std::string& s, int& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  return res.ec == std::errc{} && res.ptr == e && b != e;
}

// "10" < "9" lexicographically; sort numerically when every key parses as an
// integer so generated labels {1,2} keep their natural order.
std::vector<std::string> sorted_unique(const std::vector<std::string>& raw) {
  std::set<std::string> uniq(raw.begin(), raw.end());
  std::vector<std::string> keys(uniq.begin(), uniq.end());
  bool all_int = true;
  for (const std::string& k : keys) {
    int dummy;
    if (!parse_int(k, dummy)) {
      all_int = false;
      break;
    }
  }
  if (all_int)
    std::sort(keys.begin(), keys.end(), [](const std::string& a, const std::string& b) {
      int x = 0, y = 0;
      parse_int(a, x);
      parse_int(b, y);
      return x < y;
    });
  return keys;
}

GroupStructure groups_from_file(const std::string& path,
                                const std::vector<std::string>& vars) {
  std::map<std::string, int> var_index;
  for (size_t j = 0; j < vars.size(); ++j) var_index[vars[j]] = static_cast<int>(j);

  std::vector<int> seen(vars.size(), 0);
  std::vector<std::string> group_key(vars.size());
  for (const auto& [var, gid] : read_pair_csv(path)) {
    auto it = var_index.find(var);
    require(it != var_index.end(), "IncompleteGroups",
            path + ": unknown variable '" + var + "'");
    require(seen[static_cast<size_t>(it->second)] == 0, "OverlappingGroups",
            path + ": variable '" + var + "' assigned twice");
    seen[static_cast<size_t>(it->second)] = 1;
    group_key[static_cast<size_t>(it->second)] = gid;
  }
  for (size_t j = 0; j < vars.size(); ++j)
    require(seen[j] == 1, "IncompleteGroups",
            path + ": variable '" + vars[j] + "' has no group");

  const std::vector<std::string> keys = sorted_unique(group_key);
  std::map<std::string, int> key_id;
  for (size_t g = 0; g < keys.size(); ++g) key_id[keys[g]] = static_cast<int>(g);
  std::vector<int> labels(vars.size());
  for (size_t j = 0; j < vars.size(); ++j) labels[j] = key_id[group_key[j]];
  return GroupStructure::from_labels(labels);
}

Outcome read_outcome(const RunConfig& cfg) {
  Outcome o;
  o.kind = outcome_kind_from_string(cfg.outcome_kind);
  if (o.kind == OutcomeKind::Categorical) {
    LabelTable t = read_label_csv(cfg.outcome);
    o.class_names = sorted_unique(t.values);
    std::map<std::string, int> id;
    for (size_t k = 0; k < o.class_names.size(); ++k)
      id[o.class_names[k]] = static_cast<int>(k) + 1;
    for (const std::string& v : t.values) o.labels.push_back(id[v]);
    require(o.class_names.size() >= 2, "InvalidArgument",
            cfg.outcome + ": need at least two classes");
  } else {
    NumericTable t = read_numeric_csv(cfg.outcome);
    if (o.kind == OutcomeKind::Continuous)
      require(t.values.cols() == 1, "InvalidArgument",
              cfg.outcome + ": continuous outcome must have one column");
    o.values = t.values;
  }
  return o;
}

FitConfig make_fit_config(const RunConfig& cfg, const IngestedData& data) {
  FitConfig fc;
  fc.feature_count = cfg.M;
  if (cfg.r != "auto") {
    int r = 0;
    require(parse_int(cfg.r, r) && r >= 1, "ConfigError", "--r must be 'auto' or a positive integer");
    fc.components = r;
  }
  fc.lambda = {cfg.lambda};
  fc.max_outer_iter = cfg.max_outer_iter;
  fc.fista_budget = cfg.fista_budget;
  fc.outer_tol = cfg.outer_tol;
  fc.seed = cfg.seed;

  const int D = static_cast<int>(data.views.size());
  fc.penalty.assign(static_cast<size_t>(D), PenaltySpec{});
  if (cfg.penalty == "group") {
    // views without a group file keep the simplex constraint
    for (int d = 0; d < D; ++d) {
      if (!data.groups[static_cast<size_t>(d)]) continue;
      PenaltySpec& ps = fc.penalty[static_cast<size_t>(d)];
      ps.mode = PenaltySpec::Mode::SparseGroup;
      ps.groups = data.groups[static_cast<size_t>(d)];
      ps.eta = cfg.eta;
    }
  } else {
    require(cfg.penalty == "simplex", "ConfigError",
            "--penalty must be 'simplex' or 'group'");
  }
  for (const auto& [view, value] : cfg.rho) {
    require(view >= 0 && view <= D, "ConfigError", "--rho view index out of range");
    if (view == 0)
      for (auto& ps : fc.penalty) ps.rho = value;
    else
      fc.penalty[static_cast<size_t>(view - 1)].rho = value;
  }
  return fc;
}

void attach_ingest(FittedModel& m, const IngestedData& data) {
  m.view_center = data.center;
  m.view_scale = data.scale;
}

std::vector<std::string> view_headers(int p, int view_1based) {
  (void)view_1based;
  std::vector<std::string> h(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) h[static_cast<size_t>(j)] = "x" + std::to_string(j + 1);
  return h;
}

SimData make_sim(const RunConfig& cfg) {
  SimSpec spec;
  if (cfg.scenario == "binary") {
    spec.scenario = SimSpec::Scenario::Binary;
    spec.n1 = cfg.n1 > 0 ? cfg.n1 : 250;
    spec.n2 = cfg.n2 > 0 ? cfg.n2 : 250;
  } else if (cfg.scenario == "continuous") {
    spec.scenario = SimSpec::Scenario::Continuous;
    spec.n = cfg.n > 0 ? cfg.n : 500;
  } else {
    throw Error("ConfigError", "--scenario must be 'binary' or 'continuous'");
  }
  spec.p = cfg.p;
  spec.seed = cfg.seed;
  return spec.scenario == SimSpec::Scenario::Binary ? gen_binary(spec) : gen_continuous(spec);
}

// Selected-variable indices per the mode-dependent rule: exact zeros are
// meaningful under the sparse-group prox, the simplex keeps everything
// positive so "above the uniform mass" is the cut.
std::vector<int> selected_indices(const Vector& gamma, PenaltySpec::Mode mode) {
  const double threshold =
      mode == PenaltySpec::Mode::SparseGroup ? 0.0 : 1.0 / static_cast<double>(gamma.size());
  std::vector<int> out;
  for (int s = 0; s < gamma.size(); ++s)
    if (std::abs(gamma[s]) > threshold) out.push_back(s);
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("IoError", "cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw Error("IoError", "write failure on " + path);
}

std::string default_model_path(const RunConfig& cfg) {
  return cfg.model_path.empty() ? out_path(cfg, "model.json") : cfg.model_path;
}

}  // namespace

IngestedData ingest(const RunConfig& cfg) {
  require(cfg.views.size() >= 2, "InvalidArgument", "need at least two --view files");
  {
    std::set<std::string> uniq(cfg.views.begin(), cfg.views.end());
    require(uniq.size() == cfg.views.size(), "InvalidArgument", "view paths must be distinct");
  }

  IngestedData data;
  for (const std::string& path : cfg.views) {
    NumericTable t = read_numeric_csv(path);
    require(t.values.allFinite(), "NonFiniteInput", path + ": non-finite cell");
    data.view_vars.push_back(t.header);
    data.views.push_back(std::move(t.values));
  }
  const int n = static_cast<int>(data.views[0].rows());
  for (size_t d = 1; d < data.views.size(); ++d)
    require(static_cast<int>(data.views[d].rows()) == n, "RowCountMismatch",
            cfg.views[0] + " has " + std::to_string(n) + " rows, " + cfg.views[d] + " has " +
                std::to_string(data.views[d].rows()));

  if (!cfg.outcome.empty()) {
    data.outcome = read_outcome(cfg);
    require(data.outcome.n() == n, "RowCountMismatch",
            cfg.views[0] + " has " + std::to_string(n) + " rows, " + cfg.outcome + " has " +
                std::to_string(data.outcome.n()));
  }

  data.groups.assign(data.views.size(), std::nullopt);
  for (const auto& [view, path] : cfg.groups) {
    require(view >= 1 && view <= static_cast<int>(data.views.size()), "ConfigError",
            "--groups view index out of range: " + std::to_string(view));
    data.groups[static_cast<size_t>(view - 1)] =
        groups_from_file(path, data.view_vars[static_cast<size_t>(view - 1)]);
  }

  if (cfg.standardize) {
    for (size_t d = 0; d < data.views.size(); ++d) {
      Matrix& X = data.views[d];
      RowVector mean = X.colwise().mean();
      X.rowwise() -= mean;
      RowVector sd = (X.array().square().colwise().mean()).sqrt();
      for (int j = 0; j < sd.size(); ++j)
        if (sd[j] == 0.0) sd[j] = 1.0;  // constant column: leave centered
      X.array().rowwise() /= sd.array();
      data.center.push_back(std::move(mean));
      data.scale.push_back(std::move(sd));
    }
  }
  return data;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("IoError", "cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw Error("ConfigError", path + ": " + e.what());
  }
  require(j.is_object(), "ConfigError", path + ": top level must be an object");

  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "view" || key == "views") {
        cfg.views.clear();
        if (val.is_string())
          cfg.views.push_back(val.get<std::string>());
        else
          for (const auto& v : val) cfg.views.push_back(v.get<std::string>());
      } else if (key == "outcome") {
        cfg.outcome = val.get<std::string>();
      } else if (key == "outcome_kind") {
        cfg.outcome_kind = val.get<std::string>();
      } else if (key == "groups") {
        cfg.groups.clear();
        for (const auto& [view, p] : val.items())
          cfg.groups.emplace_back(std::stoi(view), p.get<std::string>());
      } else if (key == "M") {
        cfg.M = val.get<int>();
      } else if (key == "r") {
        cfg.r = val.is_string() ? val.get<std::string>() : std::to_string(val.get<int>());
      } else if (key == "lambda") {
        cfg.lambda = val.get<double>();
      } else if (key == "eta") {
        cfg.eta = val.get<double>();
      } else if (key == "penalty") {
        cfg.penalty = val.get<std::string>();
      } else if (key == "rho") {
        cfg.rho.clear();
        if (val.is_number()) {
          cfg.rho.emplace_back(0, val.get<double>());
        } else {
          for (const auto& [view, r] : val.items())
            cfg.rho.emplace_back(std::stoi(view), r.get<double>());
        }
      } else if (key == "rho_grid") {
        cfg.rho_grid.clear();
        if (val.is_array()) {
          cfg.rho_grid.emplace_back(0, val.get<std::vector<double>>());
        } else {
          for (const auto& [view, g] : val.items())
            cfg.rho_grid.emplace_back(std::stoi(view), g.get<std::vector<double>>());
        }
      } else if (key == "folds") {
        cfg.folds = val.get<int>();
      } else if (key == "search") {
        cfg.search = val.get<std::string>();
      } else if (key == "seed") {
        cfg.seed = val.get<std::uint64_t>();
      } else if (key == "model") {
        cfg.model_path = val.get<std::string>();
      } else if (key == "out") {
        cfg.out_dir = val.get<std::string>();
      } else if (key == "truth") {
        cfg.truth_path = val.get<std::string>();
      } else if (key == "no_standardize") {
        cfg.standardize = !val.get<bool>();
      } else if (key == "standardize") {
        cfg.standardize = val.get<bool>();
      } else if (key == "max_outer_iter") {
        cfg.max_outer_iter = val.get<int>();
      } else if (key == "fista_budget") {
        cfg.fista_budget = val.get<int>();
      } else if (key == "outer_tol") {
        cfg.outer_tol = val.get<double>();
      } else if (key == "scenario") {
        cfg.scenario = val.get<std::string>();
      } else if (key == "n") {
        cfg.n = val.get<int>();
      } else if (key == "n1") {
        cfg.n1 = val.get<int>();
      } else if (key == "n2") {
        cfg.n2 = val.get<int>();
      } else if (key == "p") {
        cfg.p = val.get<int>();
      } else {
        throw Error("ConfigError", path + ": unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error("ConfigError", path + ": " + e.what());
  }
}

void run_simulate(const RunConfig& cfg) {
  SimData d = make_sim(cfg);
  fs::create_directories(cfg.out_dir);

  for (size_t v = 0; v < d.views.size(); ++v)
    write_numeric_csv(out_path(cfg, "view" + std::to_string(v + 1) + ".csv"),
                      view_headers(static_cast<int>(d.views[v].cols()), static_cast<int>(v) + 1),
                      d.views[v]);

  if (d.outcome.kind == OutcomeKind::Categorical) {
    LabelTable t;
    t.name = "label";
    for (int l : d.outcome.labels) t.values.push_back(std::to_string(l));
    write_label_csv(out_path(cfg, "outcome.csv"), t);
  } else {
    write_numeric_csv(out_path(cfg, "outcome.csv"), {"y"}, d.outcome.values);
  }

  // signal-variable truth, consumable by `evaluate --truth`
  std::ofstream truth(out_path(cfg, "truth.csv"), std::ios::binary | std::ios::trunc);
  if (!truth) throw Error("IoError", "cannot write " + out_path(cfg, "truth.csv"));
  truth << "view,variable\n";
  for (size_t v = 0; v < d.views.size(); ++v)
    for (int s : d.signal_vars) truth << v + 1 << ",x" << s + 1 << '\n';
  if (!truth) throw Error("IoError", "write failure on " + out_path(cfg, "truth.csv"));

  std::printf("simulated %s dataset: n=%d, views=%zu, p=%d -> %s\n", cfg.scenario.c_str(),
              d.outcome.n(), d.views.size(), static_cast<int>(d.views[0].cols()),
              cfg.out_dir.c_str());
}

void run_fit(const RunConfig& cfg) {
  require(!cfg.outcome.empty(), "ConfigError", "fit requires --outcome");
  IngestedData data = ingest(cfg);
  FitConfig fc = make_fit_config(cfg, data);

  const auto t0 = std::chrono::steady_clock::now();
  FittedModel m = make_model(fit(data.views, data.outcome, fc));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  attach_ingest(m, data);
  const std::string mpath = default_model_path(cfg);
  if (fs::path(mpath).has_parent_path()) fs::create_directories(fs::path(mpath).parent_path());
  save_model(m, mpath);
  std::printf("fit: objective %.6g after %d iterations (converged=%s, %.1fs) -> %s\n",
              m.state.objective_trace.back(), m.state.iterations,
              m.state.converged ? "yes" : "no", secs, mpath.c_str());
}

void run_predict(const RunConfig& cfg) {
  require(!cfg.model_path.empty(), "ConfigError", "predict requires --model");
  FittedModel m = load_model(cfg.model_path);

  RunConfig raw = cfg;
  raw.standardize = false;  // the model applies its stored transform
  raw.outcome.clear();
  IngestedData data = ingest(raw);

  Prediction pred = predict(data.views, m);
  fs::create_directories(cfg.out_dir);
  const std::string path = out_path(cfg, "predictions.csv");
  if (m.state.outcome_meta.kind == OutcomeKind::Categorical) {
    LabelTable t;
    t.name = "label";
    for (int l : pred.labels)
      t.values.push_back(m.state.outcome_meta.class_names[static_cast<size_t>(l - 1)]);
    write_label_csv(path, t);
  } else {
    std::vector<std::string> header;
    for (int j = 0; j < pred.values.cols(); ++j)
      header.push_back(pred.values.cols() == 1 ? "y_pred" : "y_pred" + std::to_string(j + 1));
    write_numeric_csv(path, header, pred.values);
  }
  std::printf("predicted %d rows -> %s\n", static_cast<int>(data.views[0].rows()), path.c_str());
}

void run_cv(const RunConfig& cfg) {
  require(!cfg.outcome.empty(), "ConfigError", "cv requires --outcome");
  IngestedData data = ingest(cfg);
  FitConfig fc = make_fit_config(cfg, data);
  const int D = static_cast<int>(data.views.size());

  CvPlan plan;
  plan.folds = cfg.folds;
  plan.seed = cfg.seed;
  if (cfg.search == "grid") {
    plan.search = CvPlan::Search::Grid;
  } else if (cfg.search.rfind("random:", 0) == 0) {
    plan.search = CvPlan::Search::Random;
    require(parse_int(cfg.search.substr(7), plan.random_draws) && plan.random_draws >= 1,
            "ConfigError", "--search random:<k> needs a positive k");
  } else {
    throw Error("ConfigError", "--search must be 'grid' or 'random:<k>'");
  }

  plan.rho_grid.assign(static_cast<size_t>(D), {});
  for (const auto& [view, grid] : cfg.rho_grid) {
    require(view >= 0 && view <= D, "ConfigError", "rho_grid view index out of range");
    if (view == 0)
      for (auto& g : plan.rho_grid) g = grid;
    else
      plan.rho_grid[static_cast<size_t>(view - 1)] = grid;
  }
  // default: log-spaced fractions of the data-derived upper bound (the useful
  // range sits well below rho_max; by a few percent of it everything is
  // zeroed); a simplex view has no rho so its axis collapses to a single cell
  std::vector<double> rho_max;
  for (int d = 0; d < D; ++d) {
    auto& grid = plan.rho_grid[static_cast<size_t>(d)];
    if (!grid.empty()) continue;
    if (fc.penalty[static_cast<size_t>(d)].mode != PenaltySpec::Mode::SparseGroup) {
      grid = {0.0};
      continue;
    }
    if (rho_max.empty()) rho_max = rho_max_per_view(data.views, data.outcome, fc);
    for (double frac : {1e-4, 1e-3, 1e-2}) grid.push_back(frac * rho_max[static_cast<size_t>(d)]);
  }

  CvResult res = cross_validate(data.views, data.outcome, fc, plan);

  fs::create_directories(cfg.out_dir);
  const std::string path = out_path(cfg, "cv_table.csv");
  Matrix table(static_cast<int>(res.table.size()), D + plan.folds + 1);
  std::vector<std::string> header;
  for (int d = 0; d < D; ++d) header.push_back("rho_view" + std::to_string(d + 1));
  for (int f = 0; f < plan.folds; ++f) header.push_back("fold" + std::to_string(f + 1));
  header.push_back("mean");
  for (size_t i = 0; i < res.table.size(); ++i) {
    const CvCell& cell = res.table[i];
    for (int d = 0; d < D; ++d) table(static_cast<int>(i), d) = cell.rho[static_cast<size_t>(d)];
    for (int f = 0; f < plan.folds; ++f)
      table(static_cast<int>(i), D + f) =
          cell.failed ? std::numeric_limits<double>::quiet_NaN()
                      : cell.fold_scores[static_cast<size_t>(f)];
    table(static_cast<int>(i), D + plan.folds) =
        cell.failed ? std::numeric_limits<double>::quiet_NaN() : cell.mean_score;
  }
  write_numeric_csv(path, header, table);

  std::string best;
  for (int d = 0; d < D; ++d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", res.best_rho[static_cast<size_t>(d)]);
    best += std::string(d ? "," : "") + buf;
  }
  std::printf("cv: %zu combinations, best rho = (%s), mean score %.6g -> %s\n", res.table.size(),
              best.c_str(), res.table[static_cast<size_t>(res.best)].mean_score, path.c_str());
}

void run_evaluate(const RunConfig& cfg) {
  require(!cfg.model_path.empty(), "ConfigError", "evaluate requires --model");
  require(!cfg.outcome.empty(), "ConfigError", "evaluate requires --outcome");
  FittedModel m = load_model(cfg.model_path);

  RunConfig raw = cfg;
  raw.standardize = false;
  IngestedData data = ingest(raw);

  const auto t0 = std::chrono::steady_clock::now();
  Prediction pred = predict(data.views, m);

  json metrics;
  metrics["n_test"] = data.outcome.n();
  if (m.state.outcome_meta.kind == OutcomeKind::Categorical) {
    require(data.outcome.kind == OutcomeKind::Categorical, "InvalidArgument",
            "model is categorical but the outcome file is not");
    int wrong = 0;
    for (size_t i = 0; i < pred.labels.size(); ++i) {
      const std::string& predicted =
          m.state.outcome_meta.class_names[static_cast<size_t>(pred.labels[i] - 1)];
      const std::string& actual =
          data.outcome.class_names[static_cast<size_t>(data.outcome.labels[i] - 1)];
      if (predicted != actual) wrong++;
    }
    metrics["classification_error"] = static_cast<double>(wrong) / data.outcome.n();
  } else {
    require(data.outcome.kind != OutcomeKind::Categorical, "InvalidArgument",
            "model is continuous but the outcome file is categorical");
    require(pred.values.rows() == data.outcome.values.rows() &&
                pred.values.cols() == data.outcome.values.cols(),
            "DimensionMismatch", "outcome width differs from the model");
    metrics["mse"] = (pred.values - data.outcome.values).squaredNorm() /
                     static_cast<double>(data.outcome.values.size());
  }

  // per-view truth sets, when supplied
  std::vector<std::set<std::string>> truth(data.views.size());
  bool have_truth = false;
  if (!cfg.truth_path.empty()) {
    have_truth = true;
    for (const auto& [view, var] : read_pair_csv(cfg.truth_path)) {
      int v = 0;
      require(parse_int(view, v) && v >= 1 && v <= static_cast<int>(data.views.size()),
              "ParseError", cfg.truth_path + ": bad view index '" + view + "'");
      truth[static_cast<size_t>(v - 1)].insert(var);
    }
  }

  json selection = json::array();
  for (size_t d = 0; d < data.views.size(); ++d) {
    const auto mode = m.state.resolved.penalty[d].mode;
    const std::vector<int> sel = selected_indices(m.state.maps[d].gamma, mode);
    json entry;
    entry["view"] = d + 1;
    entry["n_selected"] = sel.size();
    if (have_truth) {
      const auto& names = data.view_vars[d];
      int tp = 0, fp = 0;
      for (int s : sel)
        (truth[d].count(names[static_cast<size_t>(s)]) ? tp : fp)++;
      const int pos = static_cast<int>(truth[d].size());
      const int neg = static_cast<int>(names.size()) - pos;
      entry["tpr"] = pos > 0 ? static_cast<double>(tp) / pos : 0.0;
      entry["fpr"] = neg > 0 ? static_cast<double>(fp) / neg : 0.0;
    }
    selection.push_back(entry);
  }
  metrics["selection"] = selection;
  metrics["objective_trace"] = m.state.objective_trace;
  metrics["converged"] = m.state.converged;
  metrics["iterations"] = m.state.iterations;

  fs::create_directories(cfg.out_dir);
  write_json(out_path(cfg, "metrics.json"), metrics);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // wall time stays on stdout so metrics.json is identical across re-runs
  std::printf("evaluate: wrote %s (%.1fs)\n", out_path(cfg, "metrics.json").c_str(), secs);
}

}  // namespace mvrff
