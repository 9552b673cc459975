#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvrff/csv.hpp"
#include "mvrff/runner.hpp"

using namespace mvrff;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("mvrff_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// ten rows, three columns / two columns, plus a numeric label column
void write_small_dataset(const fs::path& dir) {
  std::string v1 = "a,b,c\n";
  std::string v2 = "u,v\n";
  std::string y = "label\n";
  for (int i = 0; i < 10; ++i) {
    v1 += std::to_string(i) + "," + std::to_string(2 * i) + "," + std::to_string(i % 3) + "\n";
    v2 += std::to_string(10 - i) + "," + std::to_string(i * i) + "\n";
    y += std::to_string(i % 2 + 1) + "\n";
  }
  write_file(dir / "v1.csv", v1);
  write_file(dir / "v2.csv", v2);
  write_file(dir / "y.csv", y);
}

RunConfig small_config(const fs::path& dir) {
  RunConfig cfg;
  cfg.views = {(dir / "v1.csv").string(), (dir / "v2.csv").string()};
  cfg.outcome = (dir / "y.csv").string();
  cfg.outcome_kind = "categorical";
  return cfg;
}

}  // namespace

TEST_CASE("ingest assembles and standardizes a small dataset") {
  fs::path dir = fresh_dir("ingest");
  write_small_dataset(dir);

  IngestedData data = ingest(small_config(dir));
  REQUIRE(data.views.size() == 2);
  CHECK(data.views[0].rows() == 10);
  CHECK(data.views[0].cols() == 3);
  CHECK(data.views[1].cols() == 2);
  CHECK(data.view_vars[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(data.outcome.kind == OutcomeKind::Categorical);
  CHECK(data.outcome.n() == 10);
  CHECK(data.outcome.class_names == std::vector<std::string>{"1", "2"});

  // standardized: column means 0, population variance 1
  for (const Matrix& X : data.views) {
    CHECK(X.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((X.array().square().colwise().mean() - 1.0).abs().maxCoeff() < 1e-12);
  }

  RunConfig raw = small_config(dir);
  raw.standardize = false;
  IngestedData asis = ingest(raw);
  CHECK(asis.center.empty());
  CHECK(asis.views[0](3, 0) == 3.0);
}

TEST_CASE("ingest rejects mismatched row counts naming both files") {
  fs::path dir = fresh_dir("rows");
  write_small_dataset(dir);
  write_file(dir / "v2.csv", "u,v\n1,2\n3,4\n");  // 2 rows vs 10

  try {
    ingest(small_config(dir));
    FAIL("expected RowCountMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == "RowCountMismatch");
    const std::string msg = e.what();
    CHECK(msg.find("v1.csv") != std::string::npos);
    CHECK(msg.find("v2.csv") != std::string::npos);
  }
}

TEST_CASE("group files must partition the view's variables") {
  fs::path dir = fresh_dir("groups");
  write_small_dataset(dir);

  RunConfig cfg = small_config(dir);
  cfg.groups = {{1, (dir / "g.csv").string()}};

  write_file(dir / "g.csv", "variable,group\na,g1\nb,g1\n");  // c missing
  CHECK_THROWS_WITH_AS(ingest(cfg), doctest::Contains("'c'"), Error);
  try {
    ingest(cfg);
  } catch (const Error& e) {
    CHECK(e.kind() == "IncompleteGroups");
  }

  write_file(dir / "g.csv", "variable,group\na,g1\nb,g1\nc,g2\na,g2\n");
  try {
    ingest(cfg);
    FAIL("expected OverlappingGroups");
  } catch (const Error& e) {
    CHECK(e.kind() == "OverlappingGroups");
  }

  write_file(dir / "g.csv", "variable,group\na,g1\nb,g1\nc,g2\n");
  IngestedData data = ingest(cfg);
  REQUIRE(data.groups[0].has_value());
  CHECK(data.groups[0]->n_groups() == 2);
  CHECK(!data.groups[1].has_value());
}

TEST_CASE("config file fills fields and rejects unknown keys") {
  fs::path dir = fresh_dir("config");
  write_file(dir / "c.json",
             "{\"view\": [\"x.csv\", \"y.csv\"], \"M\": 40, \"r\": 2, \"lambda\": 0.5,"
             " \"penalty\": \"group\", \"rho\": {\"2\": 0.25}, \"folds\": 5,"
             " \"no_standardize\": true, \"seed\": 9}");

  RunConfig cfg;
  apply_config_file(cfg, (dir / "c.json").string());
  CHECK(cfg.views == std::vector<std::string>{"x.csv", "y.csv"});
  CHECK(cfg.M == 40);
  CHECK(cfg.r == "2");
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.penalty == "group");
  REQUIRE(cfg.rho.size() == 1);
  CHECK(cfg.rho[0] == std::pair<int, double>{2, 0.25});
  CHECK(cfg.folds == 5);
  CHECK(cfg.standardize == false);
  CHECK(cfg.seed == 9);

  write_file(dir / "bad.json", "{\"views_files\": []}");
  try {
    apply_config_file(cfg, (dir / "bad.json").string());
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == "ConfigError");
  }
}

TEST_CASE("simulate, fit, predict, evaluate round trip") {
  fs::path dir = fresh_dir("pipeline");

  RunConfig sim;
  sim.scenario = "binary";
  sim.n1 = 60;
  sim.n2 = 40;
  sim.p = 25;
  sim.seed = 7;
  sim.out_dir = (dir / "data").string();
  run_simulate(sim);

  RunConfig cfg;
  cfg.views = {(dir / "data/view1.csv").string(), (dir / "data/view2.csv").string()};
  cfg.outcome = (dir / "data/outcome.csv").string();
  cfg.outcome_kind = "categorical";
  cfg.M = 50;
  cfg.r = "2";
  cfg.lambda = 0.01;
  cfg.max_outer_iter = 20;
  cfg.fista_budget = 50;
  cfg.seed = 3;
  cfg.out_dir = (dir / "run").string();
  run_fit(cfg);
  CHECK(fs::exists(dir / "run/model.json"));

  RunConfig pred = cfg;
  pred.model_path = (dir / "run/model.json").string();
  run_predict(pred);
  LabelTable labels = read_label_csv((dir / "run/predictions.csv").string());
  CHECK(labels.values.size() == 100);
  for (const std::string& v : labels.values) CHECK((v == "1" || v == "2"));

  RunConfig ev = pred;
  ev.truth_path = (dir / "data/truth.csv").string();
  run_evaluate(ev);
  nlohmann::json metrics = nlohmann::json::parse(slurp(dir / "run/metrics.json"));
  REQUIRE(metrics.contains("classification_error"));
  CHECK(metrics["classification_error"].get<double>() <= 0.25);  // training data
  CHECK(metrics["n_test"] == 100);
  REQUIRE(metrics["selection"].size() == 2);
  CHECK(metrics["selection"][0].contains("tpr"));
  CHECK(metrics["objective_trace"].size() >= 2);
}

TEST_CASE("continuous evaluate reports raw-scale mse") {
  fs::path dir = fresh_dir("mse");

  RunConfig sim;
  sim.scenario = "continuous";
  sim.n = 80;
  sim.p = 25;
  sim.seed = 5;
  sim.out_dir = (dir / "data").string();
  run_simulate(sim);

  RunConfig cfg;
  cfg.views = {(dir / "data/view1.csv").string(), (dir / "data/view2.csv").string()};
  cfg.outcome = (dir / "data/outcome.csv").string();
  cfg.outcome_kind = "continuous";
  cfg.M = 40;
  cfg.r = "2";
  cfg.lambda = 0.0125;
  cfg.max_outer_iter = 10;
  cfg.fista_budget = 40;
  cfg.seed = 4;
  cfg.out_dir = (dir / "run").string();
  run_fit(cfg);

  RunConfig ev = cfg;
  ev.model_path = (dir / "run/model.json").string();
  run_evaluate(ev);
  nlohmann::json metrics = nlohmann::json::parse(slurp(dir / "run/metrics.json"));
  REQUIRE(metrics.contains("mse"));

  // cross-check against a hand computation on raw files
  NumericTable y = read_numeric_csv((dir / "data/outcome.csv").string());
  run_predict(ev);
  NumericTable yhat = read_numeric_csv((dir / "run/predictions.csv").string());
  const double mse = (y.values - yhat.values).squaredNorm() / 80.0;
  CHECK(metrics["mse"].get<double>() == doctest::Approx(mse).epsilon(1e-12));
}

TEST_CASE("re-runs are byte-identical and inputs are never mutated") {
  fs::path dir = fresh_dir("determinism");

  RunConfig sim;
  sim.scenario = "binary";
  sim.n1 = 40;
  sim.n2 = 30;
  sim.p = 22;
  sim.seed = 13;
  sim.out_dir = (dir / "data").string();
  run_simulate(sim);
  const std::string v1_before = slurp(dir / "data/view1.csv");
  const std::string y_before = slurp(dir / "data/outcome.csv");

  RunConfig sim2 = sim;
  sim2.out_dir = (dir / "data2").string();
  run_simulate(sim2);
  CHECK(slurp(dir / "data2/view1.csv") == v1_before);

  RunConfig cfg;
  cfg.views = {(dir / "data/view1.csv").string(), (dir / "data/view2.csv").string()};
  cfg.outcome = (dir / "data/outcome.csv").string();
  cfg.outcome_kind = "categorical";
  cfg.M = 30;
  cfg.r = "2";
  cfg.lambda = 1.0 / 70;
  cfg.max_outer_iter = 8;
  cfg.fista_budget = 30;
  cfg.seed = 6;
  for (const char* run : {"run1", "run2"}) {
    RunConfig c = cfg;
    c.out_dir = (dir / run).string();
    run_fit(c);
    RunConfig ev = c;
    ev.model_path = (dir / run / "model.json").string();
    ev.truth_path = (dir / "data/truth.csv").string();
    run_evaluate(ev);
  }
  CHECK(slurp(dir / "run1/model.json") == slurp(dir / "run2/model.json"));
  CHECK(slurp(dir / "run1/metrics.json") == slurp(dir / "run2/metrics.json"));

  CHECK(slurp(dir / "data/view1.csv") == v1_before);
  CHECK(slurp(dir / "data/outcome.csv") == y_before);
}

TEST_CASE("cv writes one row per candidate and a column per fold") {
  fs::path dir = fresh_dir("cvtable");

  RunConfig sim;
  sim.scenario = "binary";
  sim.n1 = 40;
  sim.n2 = 30;
  sim.p = 22;
  sim.seed = 23;
  sim.out_dir = (dir / "data").string();
  run_simulate(sim);

  std::string groups = "variable,group\n";
  for (int j = 1; j <= 22; ++j)
    groups += "x" + std::to_string(j) + "," + (j <= 20 ? "sig" : "rest") + "\n";
  write_file(dir / "groups.csv", groups);

  RunConfig cfg;
  cfg.views = {(dir / "data/view1.csv").string(), (dir / "data/view2.csv").string()};
  cfg.outcome = (dir / "data/outcome.csv").string();
  cfg.outcome_kind = "categorical";
  cfg.groups = {{1, (dir / "groups.csv").string()}, {2, (dir / "groups.csv").string()}};
  cfg.penalty = "group";
  cfg.M = 25;
  cfg.r = "2";
  cfg.lambda = 1.0 / 70;
  cfg.max_outer_iter = 4;
  cfg.fista_budget = 20;
  cfg.folds = 3;
  cfg.seed = 8;
  cfg.rho_grid = {{1, {0.001, 0.01, 0.1}}, {2, {0.001, 0.01, 0.1}}};
  cfg.out_dir = (dir / "cv").string();
  run_cv(cfg);

  NumericTable table = read_numeric_csv((dir / "cv/cv_table.csv").string());
  CHECK(table.header == std::vector<std::string>{"rho_view1", "rho_view2", "fold1", "fold2",
                                                 "fold3", "mean"});
  CHECK(table.values.rows() == 9);
  CHECK(table.values.cols() == 6);
  // the mean column is the average of the fold columns
  for (int i = 0; i < 9; ++i)
    CHECK(table.values(i, 5) ==
          doctest::Approx(table.values.row(i).segment(2, 3).mean()).epsilon(1e-12));
}

TEST_CASE("the binary reports errors as one line and obeys flag overrides") {
  fs::path dir = fresh_dir("binary");
  write_small_dataset(dir);

  const std::string cli = MVRFF_CLI_PATH;
  const std::string err_file = (dir / "err.txt").string();

  // missing outcome flag
  std::string cmd = cli + " fit --view " + (dir / "v1.csv").string() + " --view " +
                    (dir / "v2.csv").string() + " 2> " + err_file + " > /dev/null";
  int rc = std::system(cmd.c_str());
  CHECK(rc != 0);
  std::string err = slurp(err_file);
  CHECK(err.rfind("ERROR ", 0) == 0);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);

  // config file supplies the dataset; the flag overrides its seed: two runs
  // with different config-file seeds but the same --seed agree byte for byte
  RunConfig sim;
  sim.scenario = "binary";
  sim.n1 = 30;
  sim.n2 = 30;
  sim.p = 21;
  sim.seed = 2;
  sim.out_dir = (dir / "data").string();
  run_simulate(sim);

  for (int variant : {1, 2}) {
    nlohmann::json j;
    j["view"] = {(dir / "data/view1.csv").string(), (dir / "data/view2.csv").string()};
    j["outcome"] = (dir / "data/outcome.csv").string();
    j["outcome_kind"] = "categorical";
    j["M"] = 20;
    j["r"] = 2;
    j["lambda"] = 1.0 / 60;
    j["max_outer_iter"] = 4;
    j["seed"] = 1000 + variant;  // overridden below
    j["out"] = (dir / ("fit" + std::to_string(variant))).string();
    write_file(dir / "cfg.json", j.dump());
    cmd = cli + " fit --config " + (dir / "cfg.json").string() + " --seed 42 > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
  }
  CHECK(slurp(dir / "fit1/model.json") == slurp(dir / "fit2/model.json"));
}
