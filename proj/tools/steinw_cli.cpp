#include "steinw/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"Stein-method Wasserstein bounds and companion experiments"};
  app.set_version_flag("--version", std::string(steinw::kVersion));
  app.require_subcommand(1);

  steinw::cli::RunOptions opts;
  std::uint64_t seed = 0;
  int threads = 0;
  for (const char* name : {"bound", "clt", "knn", "lmc"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", opts.config, "YAML or JSON configuration")->required();
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    if (std::string(name) == "lmc") sub->add_flag("--trace", opts.trace, "dump one chain as float64 rows to trace.bin");
    sub->callback([&, name] {
      opts.pipeline = name;
      if (sub->count("--seed")) opts.seed = seed;
      if (sub->count("--threads")) opts.threads = threads;
    });
  }
  std::string results, kind, plot_out;
  auto* plot = app.add_subcommand("plotdata", "turn a results table into plot-ready series");
  plot->add_option("--results", results, "results.csv from a previous run")->required();
  plot->add_option("--kind", kind, "rate_loglog, bound_decomposition or chain_trace")->required();
  plot->add_option("--out", plot_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  if (plot->parsed()) {
    try {
      steinw::cli::emit_plot_data(results, kind, plot_out);
      return steinw::cli::kOk;
    } catch (const steinw::InvalidArgument& e) {
      std::fprintf(stderr, "error (validation): %s\n", e.what());
      return steinw::cli::kValidationError;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return steinw::cli::kPipelineError;
    }
  }
  return steinw::cli::run(opts);
}
