#pragma once

// Experiment orchestration: JSON configuration, seeded comparison of the four
// policies on a shared deployment, per-run summaries and the comparison
// report.
//
// Output layout of run_comparison:
//
//   <out>/seed_<s>/<algo>/trace.csv        per-TXOP trace (see trace_io.hpp)
//   <out>/seed_<s>/<algo>/summary.json     RunSummary
//   <out>/seed_<s>/<algo>/deployment.json
//   <out>/seed_<s>/<algo>/config.json
//   <out>/seed_<s>/<algo>/checkpoint.json  learned tables (learning policies)
//   <out>/seed_<s>/convergence.csv         windowed reward per algorithm
//   <out>/seed_<s>/sum_rate.csv            mean sum rate per window per algorithm
//   <out>/seed_<s>/fairness_per_ap.csv     mean throughput per AP per algorithm
//   <out>/report.txt, <out>/report.json

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mapc/environment.hpp"
#include "mapc/optimizer.hpp"
#include "mapc/topology.hpp"

namespace mapc {

inline const std::vector<std::string> kAllAlgorithms{"single_ap", "baseline", "hier_weighted",
                                                     "hier_proportional"};

struct ExperimentConfig {
  // Simulation parameters.
  double sta_density = 0.002;
  double coverage_radius_m = 45.0;
  std::size_t horizon_txops = 5000;
  int power_levels = 8;
  double p_max_dbm = 20.0;
  double p_min_dbm = 10.0;
  double breakpoint_m = 3.0;
  double carrier_freq_ghz = 2.4;
  double frame_bytes = 1500.0;
  double mcs_sigma_sq_db = 2.0;
  double alpha = 0.02;
  double txop_duration_s = 5.484e-3;

  // Channel and optimizer knobs.
  double noise_power_dbm = -94.0;
  double detect_threshold_db = 0.0;
  std::size_t t_outer = 50;
  std::vector<double> q_arms_mbps{0, 4, 9, 17, 26, 34, 52};
  double noise_initial = 1.0;
  double noise_decay = 0.999;
  double noise_floor = 0.05;
  bool stochastic_frames = false;
  std::string inner_reward = "objective_marginal";  // or "penalized_sum_rate"

  // Geometry.
  double room_width_m = 125.0;
  double room_height_m = 75.0;
  std::size_t n_aps = 6;
  int ap_grid_columns = 3;
  int ap_grid_rows = 2;

  // Orchestration.
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::string> algorithms = kAllAlgorithms;
  std::string output_dir = "runs";
  std::string deployment_file;  // pinned topology; empty: draw per seed
  std::string mcs_table_file;   // empty: built-in table
  std::size_t eval_txops = 0;   // frozen-policy TXOPs after training
  std::size_t tail_txops = 1000;
  std::size_t convergence_windows = 10;
  double convergence_tolerance = 0.05;

  void validate() const;

  SimParams sim_params() const;
  ChannelParams channel() const;
  TopologyConfig topology() const;
  NoiseSchedule noise() const;
  RewardConfig reward_config(RewardKind kind) const;
  HierarchyConfig hierarchy(RewardKind kind) const;
};

nlohmann::json config_to_json(const ExperimentConfig& c);
// Unknown keys and out-of-range values raise ConfigError naming the key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& c, const std::string& path);

struct RunSummary {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string deployment_hash;
  std::size_t txops = 0;
  std::optional<double> final_jain;
  double mean_sum_rate_mbps = 0.0;
  double tail_mean_sum_rate_mbps = 0.0;
  std::vector<double> per_ap_mean_mbps;
  std::optional<std::size_t> convergence_txop;
  double qos_violation_rate = 0.0;
  std::vector<double> windowed_rewards;  // NaN where undefined
  int topology_resamples = 0;
  std::size_t mask_fallbacks = 0;
};

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

// First TXOP after which the moving average (over `ma_windows` windows) of the
// windowed reward never changes by `tolerance` or more, relative; nullopt if
// the series never settles.
std::optional<std::size_t> convergence_txop(const std::vector<std::optional<double>>& rewards,
                                            std::size_t window_txops, std::size_t ma_windows,
                                            double tolerance);

// Everything here is recomputed from the trace alone.
RunSummary summarize_trace(const EpisodeTrace& trace, std::size_t tail_txops,
                           std::size_t ma_windows, double tolerance);

struct RunResult {
  EpisodeTrace trace;
  RunSummary summary;
  std::optional<EpisodeTrace> eval_trace;
  std::optional<RunSummary> eval_summary;
  nlohmann::json checkpoint;  // null for stateless policies
};

// One algorithm on one deployment. Streams derive from `master_seed`.
RunResult run_algorithm(const std::string& algorithm, const ExperimentConfig& config,
                        const Deployment& deployment, std::uint64_t master_seed,
                        Phase phase = Phase::Train, const nlohmann::json* checkpoint = nullptr);

Deployment deployment_for_seed(const ExperimentConfig& config, std::uint64_t master_seed);

struct SeedResult {
  std::uint64_t seed = 0;
  std::string deployment_hash;
  std::map<std::string, RunSummary> summaries;
  std::map<std::string, std::string> errors;  // algorithm -> abort message
};

struct ComparisonResult {
  std::vector<SeedResult> seeds;
  bool aborted = false;
};

// Runs every configured algorithm for every seed. When `write_outputs`, the
// files listed above are written under config.output_dir.
ComparisonResult run_comparison(const ExperimentConfig& config, bool write_outputs = true);

void write_run_outputs(const std::string& dir, const ExperimentConfig& config,
                       const Deployment& deployment, const RunResult& result);

struct Report {
  std::string text;
  nlohmann::json json;
};

Report emit_report(const std::vector<RunSummary>& summaries,
                   const std::vector<std::string>& notes = {});
Report emit_report(const ComparisonResult& result);

}  // namespace mapc
