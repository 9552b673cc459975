#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "mvrff/runner.hpp"

namespace {

using mvrff::Error;
using mvrff::RunConfig;

// "<view>:<rest>"; a bare value means view 0 (all views)
std::pair<int, std::string> split_view_prefix(const std::string& s, const char* flag) {
  const size_t colon = s.find(':');
  if (colon == std::string::npos) return {0, s};
  int view = 0;
  try {
    size_t used = 0;
    view = std::stoi(s.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw Error("ConfigError", std::string(flag) + ": bad view index in '" + s + "'");
  }
  return {view, s.substr(colon + 1)};
}

double parse_double_arg(const std::string& s, const char* flag) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("ConfigError", std::string(flag) + ": bad number '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiview learning with random features and variable selection"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::vector<std::string> group_args, rho_args;
  bool no_standardize = false;

  // the config file (if any) is applied before flag values land in cfg,
  // so explicit flags override it
  for (int i = 1; i < argc - 1; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  try {
    if (!config_path.empty()) mvrff::apply_config_file(cfg, config_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "ERROR %s\n", e.what());
    return 1;
  }

  app.add_option("--config", config_path, "JSON file mirroring these flags");
  app.add_option("--view", cfg.views, "view CSV, repeat in order (>= 2)")->take_all();
  app.add_option("--outcome", cfg.outcome, "outcome CSV");
  app.add_option("--outcome-kind", cfg.outcome_kind)
      ->check(CLI::IsMember({"continuous", "multi", "categorical"}));
  app.add_option("--groups", group_args, "<view>:<path>, group file for one view");
  app.add_option("--M", cfg.M, "random features per view (0 = auto)");
  app.add_option("--r", cfg.r, "shared components: 'auto' or a positive integer");
  app.add_option("--lambda", cfg.lambda, "ridge weight");
  app.add_option("--rho", rho_args, "<view>:<value> or a bare value for all views");
  app.add_option("--eta", cfg.eta, "sparse-group mix in [0,1]");
  app.add_option("--penalty", cfg.penalty)->check(CLI::IsMember({"simplex", "group"}));
  app.add_option("--folds", cfg.folds, "cv folds");
  app.add_option("--search", cfg.search, "'grid' or 'random:<k>'");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--model", cfg.model_path, "model file path");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_flag("--no-standardize", no_standardize, "use view columns as-is");
  app.add_option("--truth", cfg.truth_path, "signal-variable CSV for selection metrics");
  // simulate sizing
  app.add_option("--scenario", cfg.scenario)->check(CLI::IsMember({"binary", "continuous"}));
  app.add_option("--n", cfg.n, "samples (continuous scenario)");
  app.add_option("--n1", cfg.n1, "class-1 samples (binary scenario)");
  app.add_option("--n2", cfg.n2, "class-2 samples (binary scenario)");
  app.add_option("--p", cfg.p, "variables per view (simulate)");

  CLI::App* c_sim = app.add_subcommand("simulate", "write a synthetic dataset");
  CLI::App* c_fit = app.add_subcommand("fit", "fit a model and save it");
  CLI::App* c_pred = app.add_subcommand("predict", "predict with a saved model");
  CLI::App* c_cv = app.add_subcommand("cv", "cross-validate penalty weights");
  CLI::App* c_eval = app.add_subcommand("evaluate", "score a saved model against an outcome");
  for (CLI::App* sub : {c_sim, c_fit, c_pred, c_cv, c_eval}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (no_standardize) cfg.standardize = false;
    if (!group_args.empty()) cfg.groups.clear();
    for (const std::string& g : group_args) {
      auto [view, path] = split_view_prefix(g, "--groups");
      if (view < 1) throw Error("ConfigError", "--groups needs <view>:<path> with view >= 1");
      cfg.groups.emplace_back(view, path);
    }
    if (!rho_args.empty()) cfg.rho.clear();
    for (const std::string& r : rho_args) {
      auto [view, value] = split_view_prefix(r, "--rho");
      cfg.rho.emplace_back(view, parse_double_arg(value, "--rho"));
    }

    if (c_sim->parsed()) mvrff::run_simulate(cfg);
    if (c_fit->parsed()) mvrff::run_fit(cfg);
    if (c_pred->parsed()) mvrff::run_predict(cfg);
    if (c_cv->parsed()) mvrff::run_cv(cfg);
    if (c_eval->parsed()) mvrff::run_evaluate(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "ERROR %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ERROR Internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
