// trajzoom simulate <mode> --config <file> [--threads N] [--dump-paths]
// trajzoom plotdata --in <dir> --out <file>

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "trajzoom/runner.hpp"

namespace {

int simulate(const std::string& mode_name, const std::string& config_file, unsigned threads, bool dump) {
  using namespace trajzoom;
  std::ifstream in(config_file, std::ios::binary);
  if (!in) {
    std::cerr << "IO(config): cannot read " << config_file << '\n';
    return kExitConfig;
  }
  std::stringstream text;
  text << in.rdbuf();

  RunConfig config;
  RunOptions options;
  try {
    config = parse_config(text.str());
    const auto mode = parse_mode(mode_name);
    if (!mode) throw Error(ErrorCode::kParseError, "mode", "unknown mode '" + mode_name + "'");
    if (*mode != config.mode) {
      throw Error(ErrorCode::kInconsistent, "mode",
                  "command line says " + mode_name + ", config says " + std::string(to_string(config.mode)));
    }
    if (apply_seed_override(config)) options.seed_source = "TRAJZOOM_SEED";
  } catch (const Error& e) {
    std::cerr << config_file << ": " << e.what() << '\n';
    return kExitConfig;
  }
  options.threads = threads;
  options.dump_paths = dump;

  const RunResult result = run(config, options);
  if (result.exit_code != kExitSuccess) {
    std::cerr << "simulate " << mode_name << ": " << result.message << '\n';
    return result.exit_code;
  }
  for (const auto& f : result.files) std::cout << f.string() << '\n';
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monitored-qubit trajectories in real and effective time"};
  app.require_subcommand(1);

  std::string mode, config_file;
  unsigned threads = 1;
  bool dump = false;
  auto* sim = app.add_subcommand("simulate", "Run one mode and write CSV files plus a manifest");
  sim->add_option("mode", mode, "discrete, sde, limit, stats-excursions, stats-levy, stats-spikes or stats-entropy")
      ->required();
  sim->add_option("--config", config_file, "key=value configuration file")->required();
  sim->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 4096u));
  sim->add_flag("--dump-paths", dump, "write every trajectory, not only small ensembles");

  std::string in_dir, out_file;
  auto* plot = app.add_subcommand("plotdata", "Collect traj_*.csv files into three-panel plot data");
  plot->add_option("--in", in_dir, "directory with trajectory files")->required();
  plot->add_option("--out", out_file, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : trajzoom::kExitConfig;
  }

  if (sim->parsed()) return simulate(mode, config_file, threads, dump);
  try {
    trajzoom::emit_plotdata(in_dir, out_file);
  } catch (const trajzoom::Error& e) {
    std::cerr << "plotdata: " << e.what() << '\n';
    return trajzoom::kExitEngine;
  }
  return 0;
}
