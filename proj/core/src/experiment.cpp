#include "mapc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <numeric>

#include "mapc/errors.hpp"
#include "mapc/trace_io.hpp"

namespace fs = std::filesystem;

namespace mapc {

namespace {

void require(bool ok, const std::string& field, const std::string& bound) {
  if (!ok) throw ConfigError("config field '" + field + "' must be " + bound);
}

bool is_known_algorithm(const std::string& a) {
  return std::find(kAllAlgorithms.begin(), kAllAlgorithms.end(), a) != kAllAlgorithms.end();
}

RewardKind reward_kind_for(const std::string& algorithm) {
  return algorithm == "hier_proportional" ? RewardKind::Proportional : RewardKind::WeightedSum;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(sta_density > 0.0, "sta_density", "> 0");
  require(coverage_radius_m > 0.0, "coverage_radius_m", "> 0");
  require(horizon_txops > 0, "horizon_txops", "> 0");
  require(power_levels >= 1, "power_levels", ">= 1");
  require(p_min_dbm < p_max_dbm, "p_min_dbm", "< p_max_dbm");
  require(breakpoint_m > 0.0, "breakpoint_m", "> 0");
  require(carrier_freq_ghz > 0.0, "carrier_freq_ghz", "> 0");
  require(frame_bytes > 0.0, "frame_bytes", "> 0");
  require(mcs_sigma_sq_db > 0.0, "mcs_sigma_sq_db", "> 0");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha", "in [0, 1]");
  require(txop_duration_s > 0.0, "txop_duration_s", "> 0");
  require(std::isfinite(noise_power_dbm), "noise_power_dbm", "finite");
  require(std::isfinite(detect_threshold_db), "detect_threshold_db", "finite");
  require(t_outer >= 1, "t_outer", ">= 1");
  require(!q_arms_mbps.empty(), "q_arms_mbps", "non-empty");
  for (double q : q_arms_mbps) require(q >= 0.0, "q_arms_mbps", ">= 0 for every arm");
  require(inner_reward == "objective_marginal" || inner_reward == "penalized_sum_rate", "inner_reward",
          "one of objective_marginal, penalized_sum_rate");
  require(noise_initial >= 0.0, "noise_initial", ">= 0");
  require(noise_decay > 0.0 && noise_decay <= 1.0, "noise_decay", "in (0, 1]");
  require(noise_floor >= 0.0, "noise_floor", ">= 0");
  require(room_width_m > 0.0, "room_width_m", "> 0");
  require(room_height_m > 0.0, "room_height_m", "> 0");
  require(n_aps >= 1 && n_aps <= 16, "n_aps", "in [1, 16]");
  require(ap_grid_columns >= 1, "ap_grid_columns", ">= 1");
  require(ap_grid_rows >= 1, "ap_grid_rows", ">= 1");
  require(static_cast<std::size_t>(ap_grid_columns) * static_cast<std::size_t>(ap_grid_rows) == n_aps,
          "ap_grid_columns", "such that ap_grid_columns * ap_grid_rows == n_aps");
  require(!seeds.empty(), "seeds", "non-empty");
  require(!algorithms.empty(), "algorithms", "non-empty");
  for (const auto& a : algorithms)
    require(is_known_algorithm(a), "algorithms",
            "drawn from single_ap, baseline, hier_weighted, hier_proportional (got '" + a + "')");
  require(tail_txops >= 1, "tail_txops", ">= 1");
  require(convergence_windows >= 1, "convergence_windows", ">= 1");
  require(convergence_tolerance > 0.0, "convergence_tolerance", "> 0");
}

ChannelParams ExperimentConfig::channel() const {
  return ChannelParams{carrier_freq_ghz, breakpoint_m, noise_power_dbm, std::sqrt(mcs_sigma_sq_db),
                       detect_threshold_db};
}

SimParams ExperimentConfig::sim_params() const {
  SimParams p;
  p.horizon_txops = horizon_txops;
  p.txop_duration_s = txop_duration_s;
  p.frame_bits = frame_bytes * 8.0;
  p.channel = channel();
  p.grid = PowerGrid{power_levels, p_min_dbm, p_max_dbm};
  p.stochastic_frames = stochastic_frames;
  return p;
}

TopologyConfig ExperimentConfig::topology() const {
  TopologyConfig t;
  t.room = Room{room_width_m, room_height_m};
  t.grid = ApGrid{ap_grid_columns, ap_grid_rows};
  t.n_aps = n_aps;
  t.sta_density = sta_density;
  t.coverage_radius_m = coverage_radius_m;
  return t;
}

NoiseSchedule ExperimentConfig::noise() const { return {noise_initial, noise_decay, noise_floor}; }

RewardConfig ExperimentConfig::reward_config(RewardKind kind) const {
  return RewardConfig{kind, alpha, 0.0, t_outer};
}

HierarchyConfig ExperimentConfig::hierarchy(RewardKind kind) const {
  HierarchyConfig h;
  h.reward_kind = kind;
  h.inner_reward = inner_reward_from_string(inner_reward);
  h.alpha = alpha;
  h.average_txops = t_outer;
  h.q_arms_mbps = q_arms_mbps;
  h.outer_noise = noise();
  h.inner_noise = noise();
  return h;
}

// ---------------------------------------------------------------------------
// JSON config

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {
      {"sta_density", c.sta_density},
      {"coverage_radius_m", c.coverage_radius_m},
      {"horizon_txops", c.horizon_txops},
      {"power_levels", c.power_levels},
      {"p_max_dbm", c.p_max_dbm},
      {"p_min_dbm", c.p_min_dbm},
      {"breakpoint_m", c.breakpoint_m},
      {"carrier_freq_ghz", c.carrier_freq_ghz},
      {"frame_bytes", c.frame_bytes},
      {"mcs_sigma_sq_db", c.mcs_sigma_sq_db},
      {"alpha", c.alpha},
      {"inner_reward", c.inner_reward},
      {"txop_duration_s", c.txop_duration_s},
      {"noise_power_dbm", c.noise_power_dbm},
      {"detect_threshold_db", c.detect_threshold_db},
      {"t_outer", c.t_outer},
      {"q_arms_mbps", c.q_arms_mbps},
      {"noise_initial", c.noise_initial},
      {"noise_decay", c.noise_decay},
      {"noise_floor", c.noise_floor},
      {"stochastic_frames", c.stochastic_frames},
      {"room_width_m", c.room_width_m},
      {"room_height_m", c.room_height_m},
      {"n_aps", c.n_aps},
      {"ap_grid_columns", c.ap_grid_columns},
      {"ap_grid_rows", c.ap_grid_rows},
      {"seeds", c.seeds},
      {"algorithms", c.algorithms},
      {"output_dir", c.output_dir},
      {"deployment_file", c.deployment_file},
      {"mcs_table_file", c.mcs_table_file},
      {"eval_txops", c.eval_txops},
      {"tail_txops", c.tail_txops},
      {"convergence_windows", c.convergence_windows},
      {"convergence_tolerance", c.convergence_tolerance},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  using Setter = std::function<void(const nlohmann::json&)>;
  const std::map<std::string, Setter> setters{
      {"sta_density", [&](const auto& v) { c.sta_density = v.template get<double>(); }},
      {"coverage_radius_m", [&](const auto& v) { c.coverage_radius_m = v.template get<double>(); }},
      {"horizon_txops", [&](const auto& v) { c.horizon_txops = v.template get<std::size_t>(); }},
      {"power_levels", [&](const auto& v) { c.power_levels = v.template get<int>(); }},
      {"p_max_dbm", [&](const auto& v) { c.p_max_dbm = v.template get<double>(); }},
      {"p_min_dbm", [&](const auto& v) { c.p_min_dbm = v.template get<double>(); }},
      {"breakpoint_m", [&](const auto& v) { c.breakpoint_m = v.template get<double>(); }},
      {"carrier_freq_ghz", [&](const auto& v) { c.carrier_freq_ghz = v.template get<double>(); }},
      {"frame_bytes", [&](const auto& v) { c.frame_bytes = v.template get<double>(); }},
      {"mcs_sigma_sq_db", [&](const auto& v) { c.mcs_sigma_sq_db = v.template get<double>(); }},
      {"alpha", [&](const auto& v) { c.alpha = v.template get<double>(); }},
      {"inner_reward", [&](const auto& v) { c.inner_reward = v.template get<std::string>(); }},
      {"txop_duration_s", [&](const auto& v) { c.txop_duration_s = v.template get<double>(); }},
      {"noise_power_dbm", [&](const auto& v) { c.noise_power_dbm = v.template get<double>(); }},
      {"detect_threshold_db", [&](const auto& v) { c.detect_threshold_db = v.template get<double>(); }},
      {"t_outer", [&](const auto& v) { c.t_outer = v.template get<std::size_t>(); }},
      {"q_arms_mbps", [&](const auto& v) { c.q_arms_mbps = v.template get<std::vector<double>>(); }},
      {"noise_initial", [&](const auto& v) { c.noise_initial = v.template get<double>(); }},
      {"noise_decay", [&](const auto& v) { c.noise_decay = v.template get<double>(); }},
      {"noise_floor", [&](const auto& v) { c.noise_floor = v.template get<double>(); }},
      {"stochastic_frames", [&](const auto& v) { c.stochastic_frames = v.template get<bool>(); }},
      {"room_width_m", [&](const auto& v) { c.room_width_m = v.template get<double>(); }},
      {"room_height_m", [&](const auto& v) { c.room_height_m = v.template get<double>(); }},
      {"n_aps", [&](const auto& v) { c.n_aps = v.template get<std::size_t>(); }},
      {"ap_grid_columns", [&](const auto& v) { c.ap_grid_columns = v.template get<int>(); }},
      {"ap_grid_rows", [&](const auto& v) { c.ap_grid_rows = v.template get<int>(); }},
      {"seeds", [&](const auto& v) { c.seeds = v.template get<std::vector<std::uint64_t>>(); }},
      {"algorithms", [&](const auto& v) { c.algorithms = v.template get<std::vector<std::string>>(); }},
      {"output_dir", [&](const auto& v) { c.output_dir = v.template get<std::string>(); }},
      {"deployment_file", [&](const auto& v) { c.deployment_file = v.template get<std::string>(); }},
      {"mcs_table_file", [&](const auto& v) { c.mcs_table_file = v.template get<std::string>(); }},
      {"eval_txops", [&](const auto& v) { c.eval_txops = v.template get<std::size_t>(); }},
      {"tail_txops", [&](const auto& v) { c.tail_txops = v.template get<std::size_t>(); }},
      {"convergence_windows", [&](const auto& v) { c.convergence_windows = v.template get<std::size_t>(); }},
      {"convergence_tolerance", [&](const auto& v) { c.convergence_tolerance = v.template get<double>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config field '" + key + "' has the wrong type: " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config: " + path);
  out << config_to_json(c).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Summaries

nlohmann::json summary_to_json(const RunSummary& s) {
  auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(); };
  auto rewards = nlohmann::json::array();
  for (double r : s.windowed_rewards) rewards.push_back(std::isnan(r) ? nlohmann::json() : nlohmann::json(r));
  return {{"algorithm", s.algorithm},
          {"seed", s.seed},
          {"deployment_hash", s.deployment_hash},
          {"txops", s.txops},
          {"final_jain", opt(s.final_jain)},
          {"mean_sum_rate_mbps", s.mean_sum_rate_mbps},
          {"tail_mean_sum_rate_mbps", s.tail_mean_sum_rate_mbps},
          {"per_ap_mean_mbps", s.per_ap_mean_mbps},
          {"convergence_txop", opt(s.convergence_txop)},
          {"qos_violation_rate", s.qos_violation_rate},
          {"windowed_rewards", rewards},
          {"topology_resamples", s.topology_resamples},
          {"mask_fallbacks", s.mask_fallbacks}};
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.algorithm = j.at("algorithm").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.deployment_hash = j.at("deployment_hash").get<std::string>();
  s.txops = j.at("txops").get<std::size_t>();
  if (!j.at("final_jain").is_null()) s.final_jain = j.at("final_jain").get<double>();
  s.mean_sum_rate_mbps = j.at("mean_sum_rate_mbps").get<double>();
  s.tail_mean_sum_rate_mbps = j.at("tail_mean_sum_rate_mbps").get<double>();
  s.per_ap_mean_mbps = j.at("per_ap_mean_mbps").get<std::vector<double>>();
  if (!j.at("convergence_txop").is_null()) s.convergence_txop = j.at("convergence_txop").get<std::size_t>();
  s.qos_violation_rate = j.at("qos_violation_rate").get<double>();
  for (const auto& r : j.at("windowed_rewards"))
    s.windowed_rewards.push_back(r.is_null() ? std::numeric_limits<double>::quiet_NaN() : r.get<double>());
  s.topology_resamples = j.at("topology_resamples").get<int>();
  s.mask_fallbacks = j.at("mask_fallbacks").get<std::size_t>();
  return s;
}

std::optional<std::size_t> convergence_txop(const std::vector<std::optional<double>>& rewards,
                                            std::size_t window_txops, std::size_t ma_windows,
                                            double tolerance) {
  const std::size_t w_count = rewards.size();
  if (ma_windows == 0 || w_count < ma_windows + 1) return std::nullopt;
  // ma[w] is the mean of windows w-ma_windows+1 .. w, for w >= ma_windows-1.
  std::vector<std::optional<double>> ma(w_count);
  for (std::size_t w = ma_windows - 1; w < w_count; ++w) {
    double acc = 0.0;
    bool defined = true;
    for (std::size_t i = w + 1 - ma_windows; i <= w; ++i) {
      if (!rewards[i]) {
        defined = false;
        break;
      }
      acc += *rewards[i];
    }
    if (defined) ma[w] = acc / static_cast<double>(ma_windows);
  }
  auto stable = [&](std::size_t w) {
    if (!ma[w] || !ma[w - 1]) return false;
    const double prev = *ma[w - 1];
    const double diff = std::abs(*ma[w] - prev);
    if (prev == 0.0) return diff == 0.0;
    return diff / std::abs(prev) < tolerance;
  };
  std::size_t settled = ma_windows - 1;
  for (std::size_t w = ma_windows; w < w_count; ++w)
    if (!stable(w)) settled = w;
  if (settled == w_count - 1) return std::nullopt;
  return (settled + 1) * window_txops;
}

RunSummary summarize_trace(const EpisodeTrace& trace, std::size_t tail_txops,
                           std::size_t ma_windows, double tolerance) {
  RunSummary s;
  s.algorithm = trace.algorithm;
  s.seed = trace.seed;
  s.deployment_hash = trace.deployment_hash;
  s.txops = trace.records.size();
  s.topology_resamples = trace.topology_resamples;
  s.mask_fallbacks = trace.mask_fallbacks;
  if (trace.records.empty()) return s;

  const auto totals = trace.cumulative_per_ap();
  s.final_jain = jain_index(totals);
  const double k = static_cast<double>(trace.records.size());
  for (double t : totals) s.per_ap_mean_mbps.push_back(t / k);

  double sum = 0.0;
  std::size_t violations = 0;
  std::size_t links = 0;
  std::vector<std::optional<double>> rewards;
  for (const auto& r : trace.records) {
    sum += r.sum_rate_mbps;
    violations += r.qos_violations;
    links += r.active_ap_count;
    const bool closes_window = (r.txop + 1) % trace.window_txops == 0;
    if (closes_window) {
      rewards.push_back(r.windowed_reward);
      s.windowed_rewards.push_back(r.windowed_reward ? *r.windowed_reward
                                                     : std::numeric_limits<double>::quiet_NaN());
    }
  }
  s.mean_sum_rate_mbps = sum / k;
  s.qos_violation_rate = links ? static_cast<double>(violations) / static_cast<double>(links) : 0.0;

  const std::size_t tail = std::min(tail_txops, trace.records.size());
  double tail_sum = 0.0;
  for (std::size_t i = trace.records.size() - tail; i < trace.records.size(); ++i)
    tail_sum += trace.records[i].sum_rate_mbps;
  s.tail_mean_sum_rate_mbps = tail_sum / static_cast<double>(tail);

  s.convergence_txop = convergence_txop(rewards, trace.window_txops, ma_windows, tolerance);
  return s;
}

// ---------------------------------------------------------------------------
// Running

Deployment deployment_for_seed(const ExperimentConfig& config, std::uint64_t master_seed) {
  const auto channel = config.channel();
  if (!config.deployment_file.empty()) {
    std::ifstream in(config.deployment_file);
    if (!in) throw ConfigError("cannot open deployment file: " + config.deployment_file);
    nlohmann::json j;
    in >> j;
    Deployment d = deployment_from_json(j, channel);
    if (d.n_aps() != config.n_aps) throw ConfigError("pinned deployment AP count differs from n_aps");
    return d;
  }
  return generate_deployment(config.topology(), channel, SeedStreams(master_seed).seed_for("topology"));
}

RunResult run_algorithm(const std::string& algorithm, const ExperimentConfig& config,
                        const Deployment& deployment, std::uint64_t master_seed, Phase phase,
                        const nlohmann::json* checkpoint) {
  if (!is_known_algorithm(algorithm)) throw ConfigError("unknown algorithm '" + algorithm + "'");
  const SeedStreams streams(master_seed);
  const SimParams params = config.sim_params();
  const McsTable table =
      config.mcs_table_file.empty() ? McsTable::standard() : McsTable::load(config.mcs_table_file);
  const RewardKind kind = reward_kind_for(algorithm);

  std::unique_ptr<Policy> policy;
  HierarchicalPolicy* hier = nullptr;
  SumRateBaselinePolicy* baseline = nullptr;
  if (algorithm == "single_ap") {
    policy = std::make_unique<SingleApPolicy>(deployment, params, table);
  } else if (algorithm == "baseline") {
    auto p = std::make_unique<SumRateBaselinePolicy>(deployment, params, config.noise(),
                                                     streams.stream("policy/" + algorithm), table);
    baseline = p.get();
    policy = std::move(p);
  } else {
    auto p = std::make_unique<HierarchicalPolicy>(deployment, params, config.hierarchy(kind),
                                                  streams.stream("policy/" + algorithm), table);
    hier = p.get();
    policy = std::move(p);
  }

  auto set_phase = [&](Phase ph) {
    if (hier) hier->set_phase(ph);
    if (baseline) baseline->set_phase(ph);
  };
  auto fallbacks = [&] { return hier ? hier->mask_fallbacks() : std::size_t{0}; };
  auto snapshot = [&]() -> nlohmann::json {
    if (hier) return hier->checkpoint();
    if (baseline) return baseline->checkpoint();
    return nullptr;
  };

  Rng frame_rng = streams.stream("frames/" + algorithm);
  EpisodeOptions options{config.reward_config(kind), &table, &frame_rng};

  RunResult result;
  auto finish = [&](EpisodeTrace& trace, std::size_t fallback_before) {
    trace.seed = master_seed;
    trace.mask_fallbacks = fallbacks() - fallback_before;
    return summarize_trace(trace, config.tail_txops, config.convergence_windows,
                           config.convergence_tolerance);
  };

  if (checkpoint != nullptr) {
    if (hier) hier->restore(*checkpoint);
    if (baseline) baseline->restore(*checkpoint);
    set_phase(phase);
    Rng sta_rng = streams.stream(phase == Phase::Eval ? "sta_schedule/eval" : "sta_schedule");
    result.trace = run_episode(*policy, deployment, params, options, sta_rng);
    result.summary = finish(result.trace, 0);
    result.checkpoint = snapshot();
    return result;
  }

  Rng sta_rng = streams.stream("sta_schedule");
  result.trace = run_episode(*policy, deployment, params, options, sta_rng);
  result.summary = finish(result.trace, 0);
  result.checkpoint = snapshot();

  if (phase == Phase::Eval || config.eval_txops > 0) {
    const std::size_t before = fallbacks();
    set_phase(Phase::Eval);
    SimParams eval_params = params;
    eval_params.horizon_txops = config.eval_txops > 0 ? config.eval_txops : params.horizon_txops;
    Rng eval_sta_rng = streams.stream("sta_schedule/eval");
    auto eval = run_episode(*policy, deployment, eval_params, options, eval_sta_rng);
    result.eval_summary = finish(eval, before);
    result.eval_trace = std::move(eval);
  }
  return result;
}

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_figure_data(const fs::path& dir, const std::vector<std::string>& algorithms,
                       const std::map<std::string, RunSummary>& summaries,
                       const std::map<std::string, std::vector<double>>& window_sum_rates,
                       std::size_t window_txops) {
  std::size_t windows = 0;
  for (const auto& [_, s] : summaries) windows = std::max(windows, s.windowed_rewards.size());
  std::vector<std::string> present;
  for (const auto& a : algorithms)
    if (summaries.count(a)) present.push_back(a);

  std::ofstream conv(dir / "convergence.csv", std::ios::binary);
  std::ofstream rate(dir / "sum_rate.csv", std::ios::binary);
  conv << "window,txop_end";
  rate << "window,txop_end";
  for (const auto& a : present) {
    conv << ',' << a;
    rate << ',' << a;
  }
  conv << '\n';
  rate << '\n';
  for (std::size_t w = 0; w < windows; ++w) {
    conv << w << ',' << (w + 1) * window_txops;
    rate << w << ',' << (w + 1) * window_txops;
    for (const auto& a : present) {
      const auto& r = summaries.at(a).windowed_rewards;
      conv << ',';
      if (w < r.size() && !std::isnan(r[w])) conv << format_real(r[w]);
      const auto& sr = window_sum_rates.at(a);
      rate << ',';
      if (w < sr.size()) rate << format_real(sr[w]);
    }
    conv << '\n';
    rate << '\n';
  }

  std::ofstream fair(dir / "fairness_per_ap.csv", std::ios::binary);
  fair << "ap";
  for (const auto& a : present) fair << ',' << a;
  fair << '\n';
  std::size_t n = 0;
  for (const auto& a : present) n = std::max(n, summaries.at(a).per_ap_mean_mbps.size());
  for (std::size_t j = 0; j < n; ++j) {
    fair << j;
    for (const auto& a : present) fair << ',' << format_real(summaries.at(a).per_ap_mean_mbps.at(j));
    fair << '\n';
  }
}

std::vector<double> window_mean_sum_rates(const EpisodeTrace& trace) {
  std::vector<double> out;
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : trace.records) {
    acc += r.sum_rate_mbps;
    if (++count == trace.window_txops) {
      out.push_back(acc / static_cast<double>(count));
      acc = 0.0;
      count = 0;
    }
  }
  return out;
}

}  // namespace

void write_run_outputs(const std::string& dir, const ExperimentConfig& config,
                       const Deployment& deployment, const RunResult& result) {
  const fs::path p(dir);
  fs::create_directories(p);
  write_trace_csv(result.trace, (p / "trace.csv").string());
  nlohmann::json summary = summary_to_json(result.summary);
  if (result.eval_trace) {
    write_trace_csv(*result.eval_trace, (p / "eval_trace.csv").string());
    summary["eval"] = summary_to_json(*result.eval_summary);
  }
  write_json(p / "summary.json", summary);
  write_json(p / "deployment.json", deployment_to_json(deployment));
  write_json(p / "config.json", config_to_json(config));
  if (!result.checkpoint.is_null()) write_json(p / "checkpoint.json", result.checkpoint);
}

ComparisonResult run_comparison(const ExperimentConfig& config, bool write_outputs) {
  config.validate();
  ComparisonResult out;
  for (std::uint64_t seed : config.seeds) {
    SeedResult sr;
    sr.seed = seed;
    const Deployment deployment = deployment_for_seed(config, seed);
    sr.deployment_hash = deployment_hash(deployment);

    std::map<std::string, std::future<RunResult>> jobs;
    for (const auto& algo : config.algorithms) {
      jobs.emplace(algo, std::async(std::launch::async, [&config, &deployment, algo, seed] {
                     return run_algorithm(algo, config, deployment, seed);
                   }));
    }
    std::map<std::string, std::vector<double>> window_rates;
    const fs::path seed_dir = fs::path(config.output_dir) / ("seed_" + std::to_string(seed));
    for (const auto& algo : config.algorithms) {
      try {
        RunResult r = jobs.at(algo).get();
        if (r.trace.deployment_hash != sr.deployment_hash)
          throw Error("trace deployment hash differs from the comparison deployment");
        window_rates[algo] = window_mean_sum_rates(r.trace);
        if (write_outputs) write_run_outputs((seed_dir / algo).string(), config, deployment, r);
        sr.summaries.emplace(algo, std::move(r.summary));
      } catch (const std::exception& e) {
        sr.errors.emplace(algo, e.what());
        out.aborted = true;
      }
    }
    if (write_outputs) {
      fs::create_directories(seed_dir);
      write_figure_data(seed_dir, config.algorithms, sr.summaries, window_rates, config.t_outer);
    }
    out.seeds.push_back(std::move(sr));
  }
  if (write_outputs) {
    const Report report = emit_report(out);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::ofstream(dir / "report.txt", std::ios::binary) << report.text;
    write_json(dir / "report.json", report.json);
  }
  return out;
}

}  // namespace mapc
