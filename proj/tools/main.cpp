#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "runner/runner.hpp"

namespace {

std::vector<int> parse_k_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream is(csv);
  std::string field;
  while (std::getline(is, field, ',')) {
    if (!field.empty()) {
      out.push_back(std::stoi(field));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "kfmse: analytical MSE prediction for Kalman filters and smoothers "
      "running against fixed trajectories under model mismatch"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string k_list, mc_k_list;
  std::uint64_t seed = 0;
  long runs = 0;
  double z_threshold = 4.0;
  bool strict = false, full_matrices = false, stream = false;
  bool seed_given = false, runs_given = false;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", config_path, "run configuration (JSON)")
        ->required();
    if (needs_out) {
      cmd->add_option("--out", out_dir, "output directory")->required();
    }
  };

  CLI::App* predict = app.add_subcommand("predict", "analytical MSE report");
  add_common(predict, true);
  predict->add_flag("--full-matrices", full_matrices,
                    "also dump per-step matrices under mse_full/");
  predict->add_flag("--stream", stream,
                    "stream rows to disk instead of building the full report");

  CLI::App* montecarlo =
      app.add_subcommand("montecarlo", "empirical MSE by simulation");
  add_common(montecarlo, true);
  montecarlo->add_option("--runs", runs, "Monte Carlo run count")
      ->each([&](const std::string&) { runs_given = true; });
  montecarlo->add_option("--seed", seed, "base RNG seed")
      ->each([&](const std::string&) { seed_given = true; });

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "analytical vs empirical agreement");
  add_common(compare_cmd, true);
  compare_cmd->add_option("--runs", runs, "Monte Carlo run count")
      ->each([&](const std::string&) { runs_given = true; });
  compare_cmd->add_option("--seed", seed, "base RNG seed")
      ->each([&](const std::string&) { seed_given = true; });
  compare_cmd->add_flag("--strict", strict,
                        "exit nonzero when any |z| exceeds the threshold");
  compare_cmd->add_option("--z-threshold", z_threshold,
                          "z-score gate used with --strict");

  CLI::App* bench = app.add_subcommand("bench", "timing sweep over horizons");
  add_common(bench, true);
  bench->add_option("--K", k_list, "comma-separated horizon list")->required();
  bench->add_option("--mc-k", mc_k_list,
                    "horizons at which to also time the Monte Carlo run "
                    "(default: all, when mc is configured)");
  bench->add_option("--runs", runs, "Monte Carlo run count")
      ->each([&](const std::string&) { runs_given = true; });
  bench->add_option("--seed", seed, "base RNG seed")
      ->each([&](const std::string&) { seed_given = true; });

  CLI::App* gen = app.add_subcommand("gen-trajectory",
                                     "write the configured trajectory as CSV");
  add_common(gen, true);

  CLI::App* validate =
      app.add_subcommand("validate", "cross-check the configured scenario");
  add_common(validate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    kfmse::runner::RunConfig cfg = kfmse::runner::load_run_config(config_path);
    kfmse::runner::RunOptions opt;
    opt.out_dir = out_dir;
    opt.full_matrices = full_matrices;
    opt.stream = stream;
    opt.strict = strict;
    opt.z_threshold = z_threshold;
    if (runs_given) {
      opt.runs_override = runs;
    }
    if (seed_given) {
      opt.seed_override = seed;
    }
    if (!k_list.empty()) {
      opt.bench_k = parse_k_list(k_list);
    }
    if (!mc_k_list.empty()) {
      opt.bench_mc_k = parse_k_list(mc_k_list);
    }

    if (predict->parsed()) {
      return kfmse::runner::run_predict(cfg, opt, std::cout);
    }
    if (montecarlo->parsed()) {
      return kfmse::runner::run_montecarlo(cfg, opt, std::cout);
    }
    if (compare_cmd->parsed()) {
      return kfmse::runner::run_compare(cfg, opt, std::cout);
    }
    if (bench->parsed()) {
      return kfmse::runner::run_bench(cfg, opt, std::cout);
    }
    if (gen->parsed()) {
      return kfmse::runner::run_gen_trajectory(cfg, opt, std::cout);
    }
    if (validate->parsed()) {
      return kfmse::runner::run_validate(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
