#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "qmarkov/config.hpp"
#include "qmarkov/errors.hpp"
#include "qmarkov/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Seeded trajectory ensembles for measured and feedback-controlled quantum systems"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> snapshot_stride;
  unsigned jobs = 1;
  app.add_option("config", config_path, "experiment description (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the master seed");
  app.add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)");
  app.add_option("--out", out, "output directory (overrides output.directory)");
  app.add_option("--snapshot-stride", snapshot_stride, "store the full state every k steps (0 = off)")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path);
  std::stringstream text;
  text << in.rdbuf();

  qmarkov::ExperimentConfig cfg;
  try {
    cfg = qmarkov::parse_config(text.str());
  } catch (const qmarkov::ConfigError& e) {
    std::cerr << config_path << ": invalid configuration\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return 2;
  }
  if (seed) cfg.seed = *seed;
  if (snapshot_stride) cfg.snapshot_stride = *snapshot_stride;

  qmarkov::RunOptions options;
  options.out_dir = out ? *out : cfg.output;
  options.jobs = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  try {
    return qmarkov::run(cfg, options, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
