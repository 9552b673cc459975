#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mvrff/model.hpp"
#include "mvrff/types.hpp"

namespace mvrff {

// One bag of options shared by all subcommands; a JSON config file mirrors
// these field names and explicit flags win over the file.
struct RunConfig {
  // data
  std::vector<std::string> views;
  std::string outcome;
  std::string outcome_kind = "continuous";
  std::vector<std::pair<int, std::string>> groups;  // 1-based view -> path
  bool standardize = true;

  // model
  int M = 0;              // features per view, 0 = auto
  std::string r = "auto";  // shared components, "auto" or integer
  double lambda = 1.0;
  double eta = 0.5;
  std::string penalty = "simplex";  // or "group"
  std::vector<std::pair<int, double>> rho;  // view 0 applies to all views

  // cv
  std::vector<std::pair<int, std::vector<double>>> rho_grid;  // per view
  int folds = 3;
  std::string search = "grid";  // or "random:<k>"

  // iteration budgets
  int max_outer_iter = 200;
  int fista_budget = 100;
  double outer_tol = 1e-5;
  int restarts = 1;

  std::uint64_t seed = 0;

  // io
  std::string model_path;
  std::string out_dir = ".";
  std::string truth_path;

  // simulate
  std::string scenario = "binary";
  int n = 0, n1 = 0, n2 = 0, p = 50;
};

struct IngestedData {
  std::vector<Matrix> views;
  Outcome outcome;
  std::vector<std::vector<std::string>> view_vars;  // header names per view
  std::vector<std::optional<GroupStructure>> groups;
  std::vector<RowVector> center, scale;  // per view, empty when raw
};

// Reads and validates views/outcome/groups; standardizes view columns unless
// told otherwise.  Input files are never written to.
IngestedData ingest(const RunConfig& cfg);

void apply_config_file(RunConfig& cfg, const std::string& path);

// Subcommand bodies.  Each writes its outputs under cfg.out_dir (or to
// cfg.model_path) and throws Error on any failure.
void run_simulate(const RunConfig& cfg);
void run_fit(const RunConfig& cfg);
void run_predict(const RunConfig& cfg);
void run_cv(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);

}  // namespace mvrff
