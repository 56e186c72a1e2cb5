// mapc_sim: command-line front end for the coordinated spatial reuse simulator.
//
//   mapc_sim run --algo hier_weighted [--config c.json] [--seed 7] [--out dir] [--mode train|eval]
//   mapc_sim compare [--config c.json] [--seed 7] [--out dir]
//   mapc_sim validate-config --config c.json
//   mapc_sim replay --trace dir/trace.csv [--config c.json]
//
// Exit codes: 0 success, 1 validation failure, 2 episode abort.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"
#include "mapc/experiment.hpp"
#include "mapc/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAbort = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

mapc::ExperimentConfig resolve(const CommonFlags& f) {
  mapc::ExperimentConfig c = f.config.empty() ? mapc::ExperimentConfig{} : mapc::load_config(f.config);
  if (f.seed) c.seeds = {*f.seed};
  if (!f.out.empty()) c.output_dir = f.out;
  c.validate();
  return c;
}

int cmd_run(const CommonFlags& flags, const std::string& algo, const std::string& mode,
            const std::string& checkpoint_path) {
  auto config = resolve(flags);
  const auto phase = mapc::phase_from_string(mode);
  const std::uint64_t seed = config.seeds.front();
  const auto deployment = mapc::deployment_for_seed(config, seed);

  nlohmann::json checkpoint;
  if (!checkpoint_path.empty()) {
    std::ifstream in(checkpoint_path);
    if (!in) throw mapc::ConfigError("cannot open checkpoint: " + checkpoint_path);
    in >> checkpoint;
  }
  mapc::RunResult result;
  try {
    result = mapc::run_algorithm(algo, config, deployment, seed, phase,
                                 checkpoint_path.empty() ? nullptr : &checkpoint);
  } catch (const mapc::EpisodeAbort& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  }
  const auto dir = std::filesystem::path(config.output_dir) / ("seed_" + std::to_string(seed)) / algo;
  mapc::write_run_outputs(dir.string(), config, deployment, result);
  std::vector<mapc::RunSummary> rows{result.summary};
  if (result.eval_summary) rows.push_back(*result.eval_summary);
  std::cout << mapc::emit_report(rows).text;
  std::cout << "outputs: " << dir.string() << '\n';
  return kExitOk;
}

int cmd_compare(const CommonFlags& flags) {
  auto config = resolve(flags);
  const auto result = mapc::run_comparison(config);
  std::cout << mapc::emit_report(result).text;
  std::cout << "outputs: " << config.output_dir << '\n';
  return result.aborted ? kExitAbort : kExitOk;
}

int cmd_validate(const CommonFlags& flags) {
  auto config = resolve(flags);
  std::cout << mapc::config_to_json(config).dump(2) << '\n';
  return kExitOk;
}

int cmd_replay(const CommonFlags& flags, const std::string& trace_path) {
  auto config = resolve(flags);
  const auto trace = mapc::read_trace_csv(trace_path);
  const auto summary = mapc::summarize_trace(trace, config.tail_txops, config.convergence_windows,
                                             config.convergence_tolerance);
  std::cout << mapc::summary_to_json(summary).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-AP coordinated spatial reuse simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON experiment config (defaults when omitted)");
    sub->add_option("--seed", flags.seed, "Master seed (overrides the config's seed list)");
    sub->add_option("--out", flags.out, "Output directory");
  };

  std::string algo;
  std::string mode = "train";
  std::string checkpoint;
  auto* run = app.add_subcommand("run", "Run one algorithm");
  add_common(run);
  run->add_option("--algo", algo, "single_ap | baseline | hier_weighted | hier_proportional")->required();
  run->add_option("--mode", mode, "train | eval")->check(CLI::IsMember({"train", "eval"}));
  run->add_option("--checkpoint", checkpoint, "Resume from a checkpoint.json");

  auto* compare = app.add_subcommand("compare", "Run all configured algorithms on shared deployments");
  add_common(compare);

  auto* validate = app.add_subcommand("validate-config", "Validate a config and print it with defaults");
  add_common(validate);

  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "Recompute a run summary from a trace CSV");
  add_common(replay);
  replay->add_option("--trace", trace_path, "trace.csv to summarize")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(flags, algo, mode, checkpoint);
    if (*compare) return cmd_compare(flags);
    if (*validate) return cmd_validate(flags);
    if (*replay) return cmd_replay(flags, trace_path);
  } catch (const mapc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mapc::EpisodeAbort& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
