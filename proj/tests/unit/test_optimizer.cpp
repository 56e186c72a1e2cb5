#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "mapc/environment.hpp"
#include "mapc/errors.hpp"
#include "mapc/optimizer.hpp"

using namespace mapc;

namespace {

Deployment grid_deployment(std::uint64_t seed) {
  return generate_deployment(TopologyConfig{}, ChannelParams{}, seed);
}

Deployment two_ap() {
  return make_deployment(Room{50, 20}, {{10, 10}, {40, 10}}, {{12, 10}, {8, 14}, {35, 9}},
                         ChannelParams{});
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("select with noise") {
  Rng rng(1);
  const std::vector<double> v{1, 3, 2};
  CHECK(select_with_noise(v, 0.5, rng, Phase::Eval) == 1);
  CHECK(select_with_noise(v, 0.0, rng, Phase::Train) == 1);
  const std::vector<double> tie{2, 2, 1};
  CHECK(select_with_noise(tie, 0.0, rng, Phase::Eval) == 0);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) hits += select_with_noise(v, 1e-9, rng, Phase::Train) == 1;
  CHECK(hits == 1000);
  CHECK_THROWS_AS(select_with_noise(std::vector<double>{}, 1.0, rng, Phase::Train), DomainError);
}

TEST_CASE("equal values give uniform train-mode choices") {
  Rng rng(2);
  const std::vector<double> v(5, 0.3);
  std::vector<int> freq(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++freq[select_with_noise(v, 1.0, rng, Phase::Train)];
  const double p = 0.2;
  const double sd = std::sqrt(n * p * (1 - p));
  for (int f : freq) CHECK(std::abs(f - n * p) < 3 * sd);
}

TEST_CASE("selection is invariant to a common shift") {
  Rng a(3), b(3);
  const std::vector<double> v{0.1, 0.5, 0.45, 0.2};
  std::vector<double> shifted = v;
  for (auto& x : shifted) x += 1.0;
  for (int i = 0; i < 2000; ++i)
    CHECK(select_with_noise(v, 0.3, a, Phase::Train) == select_with_noise(shifted, 0.3, b, Phase::Train));
}

TEST_CASE("running means") {
  ArmStats s;
  for (int i = 0; i < 50; ++i) s.update(2.5);
  CHECK(s.mean == doctest::Approx(2.5));
  ArmStats alt;
  for (int i = 0; i < 1000; ++i) alt.update(i % 2);
  CHECK(alt.mean == doctest::Approx(0.5));
  ArmStats step{4.0, 3};
  step.update(8.0);
  CHECK(step.mean == doctest::Approx(4.0 + (8.0 - 4.0) / 4));
}

TEST_CASE("value table replays from the logged stream") {
  ValueTable t(6);
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> arm(0, 5);
  std::normal_distribution<double> r(0.0, 2.0);
  std::map<std::size_t, std::vector<double>> log;
  for (int i = 0; i < 3000; ++i) {
    const auto a = arm(rng);
    const double x = r(rng);
    t.update(a, x);
    log[a].push_back(x);
  }
  for (auto& [a, xs] : log) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    CHECK(t.arm(a).mean == doctest::Approx(sum / static_cast<double>(xs.size())));
    CHECK(t.arm(a).count == xs.size());
    CHECK(t.arm(a).mean >= *std::min_element(xs.begin(), xs.end()));
    CHECK(t.arm(a).mean <= *std::max_element(xs.begin(), xs.end()));
  }
  const auto back = ValueTable::from_json(t.to_json());
  for (std::size_t a = 0; a < 6; ++a) {
    CHECK(back.arm(a).mean == t.arm(a).mean);
    CHECK(back.arm(a).count == t.arm(a).count);
  }
}

TEST_CASE("unpulled arms score at the pulled mean or the fallback") {
  ValueTable t(4);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(t.scores(all) == std::vector<double>(4, 0.0));
  t.update(0, 1.0);
  t.update(1, 3.0);
  CHECK(t.scores(all) == std::vector<double>{1.0, 3.0, 2.0, 2.0});
  ValueTable pooled(4);
  pooled.update(2, 7.0);
  CHECK(t.scores(all, &pooled) == std::vector<double>{1.0, 3.0, 7.0, 7.0});
}

TEST_CASE("noise schedule") {
  ExplorationNoise n(NoiseSchedule{1.0, 0.5, 0.1});
  n.step();
  CHECK(n.scale() == 0.5);
  for (int i = 0; i < 10; ++i) n.step();
  CHECK(n.scale() == 0.1);
  CHECK_THROWS_AS((NoiseSchedule{1.0, 0.0, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((NoiseSchedule{-1.0, 0.9, 0.1}.validate()), ConfigError);
}

TEST_CASE("outer bandit") {
  Rng rng(5);
  OuterBandit single({17.0}, NoiseSchedule{});
  for (int i = 0; i < 20; ++i) CHECK(single.step(1.0, rng) == 17.0);

  OuterBandit two({0.0, 9.0}, NoiseSchedule{});
  two.reselect(rng);
  for (int w = 0; w < 100; ++w) two.step(two.current_arm() == 1 ? 1.0 : 0.0, rng);
  two.set_phase(Phase::Eval);
  CHECK(two.reselect(rng) == 9.0);

  // Eval never updates.
  const auto before = two.values().arm(1).count;
  two.step(5.0, rng);
  CHECK(two.values().arm(1).count == before);

  // Undefined window rewards are skipped.
  OuterBandit three({0.0, 4.0, 9.0}, NoiseSchedule{});
  three.step(std::nullopt, rng);
  for (std::size_t a = 0; a < 3; ++a) CHECK(three.values().arm(a).count == 0);

  CHECK_THROWS_AS(OuterBandit({}, NoiseSchedule{}), ConfigError);
  CHECK_THROWS_AS(OuterBandit({-1.0}, NoiseSchedule{}), ConfigError);
}

TEST_CASE("level-1 subsets") {
  Level1Agent l1(6, NoiseSchedule{});
  CHECK(l1.arm_count() == 32);
  for (std::size_t x = 0; x < 6; ++x) {
    CHECK(l1.subset_aps(x, 0).empty());
    CHECK(l1.subset_aps(x, 31).size() == 5);
    std::set<std::vector<std::size_t>> seen;
    for (std::size_t a = 0; a < 32; ++a) {
      const auto s = l1.subset_aps(x, a);
      CHECK(std::find(s.begin(), s.end(), x) == s.end());
      CHECK(std::is_sorted(s.begin(), s.end()));
      seen.insert(s);
    }
    CHECK(seen.size() == 32);
  }
  CHECK_THROWS_AS(l1.subset_aps(0, 32), IndexError);
  CHECK_THROWS_AS(Level1Agent(17, NoiseSchedule{}), ConfigError);
}

TEST_CASE("level-2 arm space and masking") {
  const auto d = grid_deployment(21);
  Level2Agent l2(d, 8, {}, NoiseSchedule{});
  for (std::size_t ap = 0; ap < d.n_aps(); ++ap) CHECK(l2.arm_count(ap) == d.stas_of(ap).size() * 8 * 15);
  CHECK(l2.mcs_set().size() == 15);

  Rng rng(6);
  InnerContext ctx{0, d.stas_of(0)[0]};
  for (int i = 0; i < 300; ++i) {
    const auto c = l2.select(ctx, 0, 0, ctx.sharing_sta, 50.0, rng, Phase::Train);
    CHECK(c.decoded.sta == ctx.sharing_sta);
    CHECK(c.decoded.mcs != 14);
    CHECK(0.5 * *McsTable::standard().at(c.decoded.mcs).data_rate_mbps >= 50.0);
    CHECK_FALSE(c.mask_fallback);
  }
  // Q beyond every rate: only the lowest-rate MCS (15) survives.
  for (int i = 0; i < 50; ++i) {
    const auto c = l2.select(ctx, 0, 0, ctx.sharing_sta, 1000.0, rng, Phase::Train);
    CHECK(c.mask_fallback);
    CHECK(c.decoded.mcs == 15);
  }
  CHECK_NOTHROW(l2.select(ctx, 1, 1, d.stas_of(1)[0], 0.0, rng, Phase::Train));
  CHECK_THROWS_AS(l2.select(ctx, 1, 1, ctx.sharing_sta, 0.0, rng, Phase::Train), Error);
}

TEST_CASE("level-2 decode is a bijection") {
  const auto d = grid_deployment(22);
  Level2Agent l2(d, 8, {0, 7, 13}, NoiseSchedule{});
  for (std::size_t ap = 0; ap < d.n_aps(); ++ap) {
    std::set<std::tuple<std::size_t, int, int>> seen;
    for (std::size_t a = 0; a < l2.arm_count(ap); ++a) {
      const auto arm = l2.decode(ap, a);
      CHECK(d.association[arm.sta] == ap);
      seen.insert({arm.sta, arm.power_level, arm.mcs});
    }
    CHECK(seen.size() == l2.arm_count(ap));
  }
  CHECK_THROWS_AS(Level2Agent(d, 8, {14}, NoiseSchedule{}), Error);
}

TEST_CASE("inner selection builds valid actions") {
  const auto d = grid_deployment(23);
  SimParams p;
  Level1Agent l1(d.n_aps(), NoiseSchedule{});
  Level2Agent l2(d, 8, {}, NoiseSchedule{});
  Rng rng(7);
  for (std::size_t k = 0; k < 400; ++k) {
    TxopContext ctx{k, k % 6, 0};
    ctx.sharing_sta = sample_scheduled_sta(ctx.sharing_ap, d, rng);
    for (auto scope : {QosScope::AllLinks, QosScope::SharingLink}) {
      const auto dec = inner_select(l1, l2, ctx, 26.0, scope, d, rng, Phase::Train);
      CHECK_NOTHROW(validate_action(dec.action, d, p));
      CHECK(dec.action.active_count() == l1.subset_aps(ctx.sharing_ap, dec.level1_arm).size() + 1);
      for (const auto& slot : dec.action.per_ap_schedule)
        if (slot && scope == QosScope::AllLinks)
          CHECK(0.5 * *McsTable::standard().at(slot->mcs).data_rate_mbps >= 26.0);
      const auto& sharing = *dec.action.per_ap_schedule[ctx.sharing_ap];
      CHECK(0.5 * *McsTable::standard().at(sharing.mcs).data_rate_mbps >= 26.0);
      inner_update(l1, l2, dec, 0.1, Phase::Train);
    }
  }
}

TEST_CASE("fallback counter and eval-mode freeze") {
  const auto d = grid_deployment(24);
  Level1Agent l1(d.n_aps(), NoiseSchedule{});
  Level2Agent l2(d, 8, {}, NoiseSchedule{});
  Rng rng(8);
  TxopContext ctx{0, 0, d.stas_of(0)[0]};
  const auto dec = inner_select(l1, l2, ctx, 500.0, QosScope::AllLinks, d, rng, Phase::Train);
  CHECK(dec.mask_fallbacks == dec.action.active_count());

  const auto frozen = inner_select(l1, l2, ctx, 0.0, QosScope::SharingLink, d, rng, Phase::Eval);
  inner_update(l1, l2, frozen, 10.0, Phase::Eval);
  CHECK(l1.table(InnerContext{0, ctx.sharing_sta})->arm(frozen.level1_arm).count == 0);
}

TEST_CASE("greedy mcs") {
  CHECK(greedy_mcs(18.1) == 7);
  CHECK(greedy_mcs(18.09) == 7);
  CHECK(greedy_mcs(10.61) == 0);  // ties with MCS 15 on the threshold; higher rate wins
  CHECK(greedy_mcs(10.655) == 1);
  CHECK(greedy_mcs(5.0) == 15);
  CHECK(greedy_mcs(100.0) == 13);
}

TEST_CASE("jain gradient matches finite differences") {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.5, 60);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(6);
    for (auto& v : a) v = u(rng);
    const auto g = jain_gradient(a);
    double dot = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      auto hi = a, lo = a;
      const double h = 1e-5;
      hi[j] += h;
      lo[j] -= h;
      const double fd = (*jain_index(hi) - *jain_index(lo)) / (2 * h);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
      dot += g[j] * a[j];
    }
    CHECK(std::abs(dot) < 1e-12);  // degree-0 homogeneity
  }
  CHECK(jain_gradient(std::vector<double>(3, 0.0)) == std::vector<double>(3, 0.0));
}

TEST_CASE("proportional weights") {
  const std::vector<double> a{10, 20, 40};
  const auto w = proportional_weights(a);
  CHECK((w[0] + w[1] + w[2]) / 3 == doctest::Approx(1.0));
  CHECK(w[0] == doctest::Approx(2 * w[1]));
  CHECK(w[1] == doctest::Approx(2 * w[2]));
  const auto eq = proportional_weights(std::vector<double>(4, 0.0));
  for (double x : eq) CHECK(x == doctest::Approx(1.0));
}

TEST_CASE("inner reward signals") {
  const auto d = two_ap();
  SimParams p;
  TxopOutcome out;
  out.per_ap_rate = {60.0, 20.0};
  out.sum_rate_mbps = 80.0;
  out.qos_violations = {1};

  HierarchyConfig psr;
  psr.inner_reward = InnerReward::PenalizedSumRate;
  psr.q_arms_mbps = {9.0};
  HierarchicalPolicy a(d, p, psr, Rng(1));
  CHECK(a.inner_reward(out) == doctest::Approx((80.0 - 9.0) / 172.0));
  CHECK(penalized_sum_rate(out, 9.0) == 71.0);

  // No history yet: the Jain term vanishes, leaving the throughput share.
  HierarchyConfig ws;
  ws.q_arms_mbps = {0.0};
  HierarchicalPolicy b(d, p, ws, Rng(1));
  CHECK(b.inner_reward(out) == doctest::Approx(0.02 * 80.0 / (2 * 172.0)));

  HierarchyConfig pf = ws;
  pf.reward_kind = RewardKind::Proportional;
  HierarchicalPolicy c(d, p, pf, Rng(1));
  CHECK(c.inner_reward(out) == doctest::Approx(80.0 / 172.0));

  CHECK(inner_reward_from_string(to_string(InnerReward::ObjectiveMarginal)) == InnerReward::ObjectiveMarginal);
  CHECK_THROWS_AS(inner_reward_from_string("sum"), ConfigError);
}

TEST_CASE("hierarchical policy checkpoints and eval determinism") {
  const auto d = grid_deployment(25);
  SimParams p;
  p.horizon_txops = 600;
  HierarchyConfig cfg;
  HierarchicalPolicy pol(d, p, cfg, Rng(11));
  Rng sta(2);
  EpisodeOptions opt;
  run_episode(pol, d, p, opt, sta);
  const auto ck = pol.checkpoint();

  HierarchicalPolicy x(d, p, cfg, Rng(99)), y(d, p, cfg, Rng(12345));
  x.restore(nlohmann::json::parse(ck.dump()));
  y.restore(ck);
  x.set_phase(Phase::Eval);
  y.set_phase(Phase::Eval);
  CHECK(x.checkpoint() == y.checkpoint());
  Rng s1(4), s2(4);
  p.horizon_txops = 200;
  const auto t1 = run_episode(x, d, p, opt, s1);
  const auto t2 = run_episode(y, d, p, opt, s2);
  for (std::size_t k = 0; k < t1.records.size(); ++k) {
    CHECK(t1.records[k].sum_rate_mbps == t2.records[k].sum_rate_mbps);
    CHECK(t1.records[k].current_q == t2.records[k].current_q);
  }

  HierarchyConfig pf = cfg;
  pf.reward_kind = RewardKind::Proportional;
  HierarchicalPolicy other(d, p, pf, Rng(1));
  CHECK_THROWS_AS(other.restore(ck), ConfigError);
}

TEST_CASE("sum-rate baseline") {
  const auto d = grid_deployment(26);
  SimParams p;
  p.horizon_txops = 500;
  SumRateBaselinePolicy pol(d, p, NoiseSchedule{}, Rng(3));
  Rng sta(5);
  for (std::size_t k = 0; k < 300; ++k) {
    TxopContext ctx{k, k % 6, 0};
    ctx.sharing_sta = sample_scheduled_sta(ctx.sharing_ap, d, sta);
    const auto a = pol.act(ctx);
    for (const auto& slot : a.per_ap_schedule)
      if (slot && slot->active()) CHECK(*slot->power_level == p.grid.max_level());
    const auto out = apply_action(a, d, p, 0.0);
    pol.observe(a, out);
  }
}

TEST_CASE("baseline on a tiny instance finds the best subset") {
  const auto d = two_ap();
  SimParams p;
  p.horizon_txops = 2000;
  SumRateBaselinePolicy pol(d, p, NoiseSchedule{}, Rng(7));
  Rng sta(7);
  run_episode(pol, d, p, EpisodeOptions{}, sta);
  pol.set_phase(Phase::Eval);

  // Enumerate both subsets per context with a greedy-MCS evaluator.
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y : d.stas_of(x)) {
      double best = -1;
      std::size_t best_arm = 0;
      for (std::size_t arm = 0; arm < 2; ++arm) {
        // Average over the other AP's STA choice (uniform draw in the policy).
        double mean = 0.0;
        const std::size_t other = 1 - x;
        const auto stas = d.stas_of(other);
        const std::size_t reps = arm ? stas.size() : 1;
        for (std::size_t r = 0; r < reps; ++r) {
          TxopAction a;
          a.sharing_ap = x;
          a.sharing_sta = y;
          a.per_ap_schedule.assign(2, std::nullopt);
          a.per_ap_schedule[x] = ApAssignment{y, 7, 0};
          if (arm) a.per_ap_schedule[other] = ApAssignment{stas[r], 7, 0};
          assign_greedy_mcs(a, d, p, McsTable::standard());
          mean += apply_action(a, d, p, 0.0).sum_rate_mbps;
        }
        mean /= static_cast<double>(reps);
        if (mean > best) {
          best = mean;
          best_arm = arm;
        }
      }
      const auto* t = pol.level1().table(InnerContext{x, y});
      REQUIRE(t != nullptr);
      const std::vector<std::size_t> both{0, 1};
      const auto s = t->scores(both);
      CHECK((s[1] > s[0] ? 1u : 0u) == best_arm);
    }
}

TEST_CASE("single-AP policy") {
  const auto d = grid_deployment(27);
  SimParams p;
  SingleApPolicy pol(d, p);
  Rng sta(1);
  for (std::size_t k = 0; k < 60; ++k) {
    TxopContext ctx{k, k % 6, 0};
    ctx.sharing_sta = sample_scheduled_sta(ctx.sharing_ap, d, sta);
    const auto a = pol.act(ctx);
    CHECK(a.active_count() == 1);
    CHECK(*a.per_ap_schedule[ctx.sharing_ap]->power_level == 7);
  }

  // One-AP network: the baseline has nothing to share and matches single-AP.
  const auto lone = make_deployment(Room{20, 20}, {{10, 10}}, {{12, 10}, {5, 5}}, ChannelParams{});
  SumRateBaselinePolicy base(lone, p, NoiseSchedule{}, Rng(1));
  SingleApPolicy one(lone, p);
  p.horizon_txops = 50;
  Rng s1(3), s2(3);
  const auto t1 = run_episode(base, lone, p, EpisodeOptions{}, s1);
  const auto t2 = run_episode(one, lone, p, EpisodeOptions{}, s2);
  for (std::size_t k = 0; k < 50; ++k) CHECK(t1.records[k].sum_rate_mbps == t2.records[k].sum_rate_mbps);
}

TEST_CASE("single-AP sum rate never beats an interference-free MAPC action") {
  // APs 200 m apart: interference is far below the noise floor.
  const auto d = make_deployment(Room{400, 20}, {{10, 10}, {390, 10}}, {{12, 10}, {388, 10}},
                                 ChannelParams{});
  SimParams p;
  SingleApPolicy single(d, p);
  TxopContext ctx{0, 0, 0};
  const double solo = apply_action(single.act(ctx), d, p, 0.0).sum_rate_mbps;
  TxopAction both = single.act(ctx);
  both.per_ap_schedule[1] = ApAssignment{1, 7, 0};
  assign_greedy_mcs(both, d, p, McsTable::standard());
  CHECK(apply_action(both, d, p, 0.0).sum_rate_mbps >= solo);
}

TEST_CASE("phase names") {
  CHECK(phase_from_string("train") == Phase::Train);
  CHECK(to_string(Phase::Eval) == "eval");
  CHECK_THROWS_AS(phase_from_string("test"), ConfigError);
}

}
