#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "steinw/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace steinw;
using namespace steinw::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string csv_text(const PipelineOutput& out) {
  std::ostringstream s;
  out.results.write(s);
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("steinw_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

const json kClt = {{"pipeline", "clt"}, {"summand", "rademacher"}, {"dim", 1}, {"ns", {4, 16, 64}}, {"samples", 300}};

}  // namespace

TEST_CASE("minimal clt run") {
  const auto out = run_pipeline("clt", kClt, 7, 2);
  CHECK(out.results.rows.size() == 3);
  CHECK(out.results.columns.front() == "header_version");
  CHECK(out.report.contains("fit"));
  CHECK(out.summary.find("slope") != std::string::npos);
}

TEST_CASE("determinism across runs and thread counts") {
  CHECK(csv_text(run_pipeline("clt", kClt, 7, 1)) == csv_text(run_pipeline("clt", kClt, 7, 4)));
  const json knn = {{"ns", {200, 300}}, {"k", 12}};
  CHECK(csv_text(run_pipeline("knn", knn, 3, 1)) == csv_text(run_pipeline("knn", knn, 3, 4)));
  CHECK(csv_text(run_pipeline("clt", kClt, 7, 2)) != csv_text(run_pipeline("clt", kClt, 8, 2)));
}

TEST_CASE("validation errors carry the field") {
  const json chain = {{"kind", "markov_chain"}, {"h", 0.01}, {"tau", 1.5}};
  try {
    run_pipeline("bound", chain, 1, 1);
    FAIL("expected a validation error");
  } catch (const InvalidArgument& e) {
    CHECK(e.field() == "tau");
  }
  json typo = kClt;
  typo["sampels"] = 3;
  CHECK_THROWS_AS(run_pipeline("clt", typo, 1, 1), InvalidArgument);
  json wrong_type = kClt;
  wrong_type["ns"] = "many";
  CHECK_THROWS_AS(run_pipeline("clt", wrong_type, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(run_pipeline("knn", kClt, 1, 1), InvalidArgument);
  const json lmc = {{"dims", {1}}, {"h_grid", {0.2}}, {"n_grid", {1, 4}}, {"chains", 50}, {"bootstrap", 0}, {"eps", {2.0}}};
  CHECK_NOTHROW(run_pipeline("lmc", lmc, 1, 1));
  json negative = lmc;
  negative["n_grid"] = {-1, 4};
  try {
    run_pipeline("lmc", negative, 1, 1);
    FAIL("expected a validation error");
  } catch (const InvalidArgument& e) {
    CHECK(e.field() == "n_grid[0]");
  }
}

TEST_CASE("run writes outputs and exit codes") {
  const auto dir = scratch("run");
  {
    std::ofstream f(dir / "clt.yaml");
    f << "pipeline: clt\nseed: 4\nns: [4, 16, 64]\nsamples: 200\n";
  }
  RunOptions opts;
  opts.pipeline = "clt";
  opts.config = dir / "clt.yaml";
  opts.out = dir / "out";
  opts.threads = 1;
  CHECK(run(opts) == kOk);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(fs::exists(dir / "out" / "summary.txt"));
  const auto report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["version"] == std::string(kVersion));
  CHECK(report["config"]["seed"] == 4);
  const auto first = slurp(dir / "out" / "results.csv");
  opts.threads = 3;
  CHECK(run(opts) == kOk);
  CHECK(slurp(dir / "out" / "results.csv") == first);

  {
    std::ofstream f(dir / "bad.yaml");
    f << "pipeline: bound\nkind: markov_chain\nh: 0.01\ntau: 1.5\n";
  }
  opts.pipeline = "bound";
  opts.config = dir / "bad.yaml";
  opts.out = dir / "bad";
  CHECK(run(opts) == kValidationError);
  const auto err = json::parse(slurp(dir / "bad" / "error.json"));
  CHECK(err["error"]["field"] == "tau");
  CHECK(err["error"]["exit_code"] == 2);

  opts.config = dir / "missing.yaml";
  CHECK(run(opts) == kValidationError);
}

TEST_CASE("plot data") {
  const auto dir = scratch("plot");
  RunOptions opts;
  {
    std::ofstream f(dir / "clt.json");
    f << R"({"pipeline": "clt", "ns": [4, 16, 64], "samples": 200})";
  }
  opts.pipeline = "clt";
  opts.config = dir / "clt.json";
  opts.out = dir / "clt";
  opts.threads = 1;
  REQUIRE(run(opts) == kOk);
  emit_plot_data(dir / "clt" / "results.csv", "rate_loglog", dir / "loglog.csv");
  const auto t = CsvTable::read(dir / "loglog.csv");
  CHECK(t.columns == std::vector<std::string>{"log_n", "log_distance"});
  CHECK(t.rows.size() == 3);
  CHECK_THROWS_AS(emit_plot_data(dir / "clt" / "results.csv", "bound_decomposition", dir / "x.csv"), InvalidArgument);
  CHECK_THROWS_AS(emit_plot_data(dir / "clt" / "results.csv", "histogram", dir / "x.csv"), InvalidArgument);

  {
    std::ofstream f(dir / "bound.yaml");
    f << "pipeline: bound\nkind: gauss_w2\nsampler: {type: ou, dim: 1}\nn_outer: 100\nt_grid: {min: 1.0e-3, max: 10, nodes: 40}\n";
  }
  opts.pipeline = "bound";
  opts.config = dir / "bound.yaml";
  opts.out = dir / "bound";
  REQUIRE(run(opts) == kOk);
  emit_plot_data(dir / "bound" / "results.csv", "bound_decomposition", dir / "decomp.csv");
  const auto d = CsvTable::read(dir / "decomp.csv");
  CHECK(d.columns.size() == 9);
  CHECK(d.rows.size() == 40);

  {
    std::ofstream f(dir / "lmc.yaml");
    f << "pipeline: lmc\ndims: [1]\nh_grid: [0.2]\nn_grid: [1, 10, 100]\nchains: 200\nbootstrap: 0\neps: [0.5]\n";
  }
  opts.pipeline = "lmc";
  opts.config = dir / "lmc.yaml";
  opts.out = dir / "lmc";
  opts.trace = true;
  REQUIRE(run(opts) == kOk);
  emit_plot_data(dir / "lmc" / "results.csv", "chain_trace", dir / "trace.csv");
  const auto tr = CsvTable::read(dir / "trace.csv");
  CHECK(tr.rows.size() == 101);
  CHECK(tr.columns.back() == "sq_norm");
}
