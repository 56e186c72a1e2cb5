#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mapc/errors.hpp"
#include "mapc/experiment.hpp"
#include "mapc/trace_io.hpp"

using namespace mapc;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.horizon_txops = 400;
  c.tail_txops = 100;
  c.seeds = {3, 4};
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mapc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("trace_io") {

TEST_CASE("csv round trip") {
  const auto c = small_config();
  const auto d = deployment_for_seed(c, 3);
  const auto r = run_algorithm("hier_weighted", c, d, 3);
  std::stringstream ss;
  write_trace_csv(r.trace, ss);
  const auto back = read_trace_csv(ss);
  CHECK(back.algorithm == r.trace.algorithm);
  CHECK(back.deployment_hash == r.trace.deployment_hash);
  CHECK(back.seed == 3);
  CHECK(back.n_aps == 6);
  REQUIRE(back.records.size() == r.trace.records.size());
  for (std::size_t k = 0; k < back.records.size(); ++k) {
    const auto& a = back.records[k];
    const auto& b = r.trace.records[k];
    CHECK(a.sum_rate_mbps == b.sum_rate_mbps);
    CHECK(a.per_ap_rate == b.per_ap_rate);
    CHECK(a.windowed_reward == b.windowed_reward);
    CHECK(a.current_q == b.current_q);
    CHECK(a.scheduled_sta == b.scheduled_sta);
  }
  std::stringstream again;
  write_trace_csv(back, again);
  std::stringstream first;
  write_trace_csv(r.trace, first);
  CHECK(again.str() == first.str());
}

TEST_CASE("replayed summary equals the live summary") {
  const auto c = small_config();
  const auto d = deployment_for_seed(c, 4);
  const auto r = run_algorithm("baseline", c, d, 4);
  std::stringstream ss;
  write_trace_csv(r.trace, ss);
  const auto s = summarize_trace(read_trace_csv(ss), c.tail_txops, c.convergence_windows,
                                 c.convergence_tolerance);
  CHECK(summary_to_json(s) == summary_to_json(r.summary));
}

TEST_CASE("malformed traces are rejected") {
  std::stringstream none("txop,sharing_ap\n0,0\n");
  CHECK_THROWS_AS(read_trace_csv(none), Error);
  CHECK_THROWS_AS(read_trace_csv(std::string("/nonexistent/trace.csv")), Error);
}

}

TEST_SUITE("experiment") {

TEST_CASE("config defaults") {
  const ExperimentConfig c;
  CHECK(c.horizon_txops == 5000);
  CHECK(c.txop_duration_s == 5.484e-3);
  CHECK(c.alpha == 0.02);
  CHECK(c.power_levels == 8);
  CHECK(c.sta_density == 0.002);
  CHECK(c.frame_bytes == 1500.0);
  CHECK(c.mcs_sigma_sq_db == 2.0);
  CHECK(c.t_outer == 50);
  CHECK(c.n_aps == 6);
  CHECK_NOTHROW(c.validate());
  const auto p = c.sim_params();
  CHECK(p.frame_bits == 12000.0);
  CHECK(p.channel.mcs_sigma_db == doctest::Approx(std::sqrt(2.0)));
  CHECK(p.grid.max_level() == 7);
}

TEST_CASE("config validation") {
  auto j = config_to_json(ExperimentConfig{});
  j["alpha"] = 1.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = config_to_json(ExperimentConfig{});
  j["n_apps"] = 6;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = config_to_json(ExperimentConfig{});
  j["horizon_txops"] = "many";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = config_to_json(ExperimentConfig{});
  j["inner_reward"] = "greedy";
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = config_to_json(ExperimentConfig{});
  j["algorithms"] = {"hier_weighted", "oracle"};
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config save and load") {
  auto c = small_config();
  c.alpha = 0.3;
  c.q_arms_mbps = {0, 10};
  const auto dir = scratch("cfg");
  save_config(c, (dir / "c.json").string());
  const auto back = load_config((dir / "c.json").string());
  CHECK(config_to_json(back) == config_to_json(c));
  // Partial files fill in defaults.
  std::ofstream(dir / "p.json") << R"({"alpha": 0.5})";
  const auto partial = load_config((dir / "p.json").string());
  CHECK(partial.alpha == 0.5);
  CHECK(partial.horizon_txops == 5000);
  fs::remove_all(dir);
}

TEST_CASE("convergence point") {
  std::vector<std::optional<double>> flat(20, 1.0);
  CHECK(convergence_txop(flat, 50, 10, 0.05) == 500u);

  std::vector<std::optional<double>> ramp(5, 0.0);
  ramp.resize(35, 1.0);
  // MA reaches 1 at window 14 and stays.
  CHECK(convergence_txop(ramp, 50, 10, 0.05) == 750u);

  auto late = flat;
  late.back() = 3.0;
  CHECK_FALSE(convergence_txop(late, 50, 10, 0.05).has_value());
  CHECK_FALSE(convergence_txop(std::vector<std::optional<double>>(10, 1.0), 50, 10, 0.05).has_value());

  std::vector<std::optional<double>> gap(40, 1.0);
  gap[12] = std::nullopt;
  // Windows whose MA span covers the gap are undefined, hence unstable.
  CHECK(convergence_txop(gap, 50, 10, 0.05) == 50u * 23);
}

TEST_CASE("summary recomputation from records") {
  EpisodeTrace t;
  t.algorithm = "x";
  t.n_aps = 2;
  t.window_txops = 2;
  for (std::size_t k = 0; k < 4; ++k) {
    TxopRecord r;
    r.txop = k;
    r.sharing_ap = k % 2;
    r.active_ap_count = 1 + k % 2;
    r.per_ap_rate = {static_cast<double>(k), 1.0};
    r.sum_rate_mbps = r.per_ap_rate[0] + r.per_ap_rate[1];
    r.qos_violations = k == 3 ? 1 : 0;
    if (k % 2 == 1) r.windowed_reward = 0.5;
    t.records.push_back(r);
  }
  const auto s = summarize_trace(t, 2, 10, 0.05);
  CHECK(s.mean_sum_rate_mbps == doctest::Approx((1 + 2 + 3 + 4) / 4.0));
  CHECK(s.tail_mean_sum_rate_mbps == doctest::Approx((3 + 4) / 2.0));
  CHECK(s.per_ap_mean_mbps == std::vector<double>{1.5, 1.0});
  CHECK(*s.final_jain == doctest::Approx(100.0 / (2 * (36 + 16))));
  CHECK(s.qos_violation_rate == doctest::Approx(1.0 / 6));
  CHECK(s.windowed_rewards == std::vector<double>{0.5, 0.5});
  const auto back = summary_from_json(summary_to_json(s));
  CHECK(summary_to_json(back) == summary_to_json(s));
}

TEST_CASE("report text and json agree") {
  auto c = small_config();
  c.algorithms = {"single_ap", "baseline"};
  const auto res = run_comparison(c, false);
  CHECK_FALSE(res.aborted);
  REQUIRE(res.seeds.size() == 2);
  const auto rep = emit_report(res);
  REQUIRE(rep.json["runs"].size() == 4);
  REQUIRE(rep.json["medians"].size() == 2);
  for (const auto& row : rep.json["runs"]) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", row["tail_mean_sum_rate_mbps"].get<double>());
    CHECK(rep.text.find(buf) != std::string::npos);
  }
  const auto& s = res.seeds[0].summaries.at("single_ap");
  const auto one = emit_report(std::vector<RunSummary>{s});
  CHECK(one.json["runs"].size() == 1);
  CHECK(one.json["medians"].empty());
}

TEST_CASE("runs are reproducible and write their outputs") {
  auto c = small_config();
  c.seeds = {5};
  const auto d = deployment_for_seed(c, 5);
  const auto a = run_algorithm("hier_proportional", c, d, 5);
  const auto b = run_algorithm("hier_proportional", c, d, 5);
  CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));
  CHECK(a.checkpoint == b.checkpoint);

  const auto dir = scratch("run");
  write_run_outputs(dir.string(), c, d, a);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  fs::remove_all(dir);

  CHECK_THROWS_AS(run_algorithm("nope", c, d, 5), ConfigError);
}

TEST_CASE("eval phase from a checkpoint keeps the policy frozen") {
  auto c = small_config();
  const auto d = deployment_for_seed(c, 3);
  const auto trained = run_algorithm("hier_weighted", c, d, 3);
  const auto e1 = run_algorithm("hier_weighted", c, d, 3, Phase::Eval, &trained.checkpoint);
  const auto e2 = run_algorithm("hier_weighted", c, d, 3, Phase::Eval, &trained.checkpoint);
  CHECK(summary_to_json(e1.summary) == summary_to_json(e2.summary));
  CHECK(e1.checkpoint["level2"] == trained.checkpoint["level2"]);
}

}
