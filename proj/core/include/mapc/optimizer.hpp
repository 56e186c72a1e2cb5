#pragma once

// Two-layer hierarchical multi-armed bandit for coordinated spatial reuse.
//
//   outer layer   OuterBandit picks the QoS target Q once per T_outer window,
//                 fed back with the windowed weighted-sum or PF reward.
//   inner layer   per TXOP, given the context (sharing AP x, scheduled STA y):
//                   level 1  Level1Agent picks the subset of shared APs;
//                   level 2  Level2Agent picks (STA, power level, MCS) for every
//                            AP in the subset and (power, MCS) for the sharing AP.
//
// All agents keep tabular running means and explore with Gaussian noise added
// to each arm's estimate before the argmax. Eval phase freezes the tables and
// selects by pure argmax.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mapc/channel.hpp"
#include "mapc/environment.hpp"
#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

namespace mapc {

enum class Phase { Train, Eval };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

struct ArmStats {
  double mean = 0.0;
  std::uint64_t count = 0;

  void update(double reward) {
    ++count;
    mean += (reward - mean) / static_cast<double>(count);
  }
};

struct NoiseSchedule {
  double initial = 1.0;
  double decay = 0.999;
  double floor = 0.05;

  void validate() const;
};

// Current exploration std-dev; decays once per train-phase selection.
class ExplorationNoise {
 public:
  explicit ExplorationNoise(NoiseSchedule schedule = {})
      : schedule_(schedule), scale_(schedule.initial) {}

  double scale() const { return scale_; }
  void set_scale(double s) { scale_ = s; }
  void step();
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  NoiseSchedule schedule_;
  double scale_;
};

// Train: argmax_i (values[i] + N(0, noise_scale^2)). Eval: argmax_i values[i].
// Ties resolve to the lowest index.
std::size_t select_with_noise(std::span<const double> values, double noise_scale, Rng& rng,
                              Phase phase);

// One table of running means. Arms never pulled are scored at the mean of the
// pulled arms' estimates (0 while nothing has been pulled), so Gaussian noise
// alone decides whether they get tried. With a fallback table, unpulled arms
// take the fallback's score instead.
class ValueTable {
 public:
  ValueTable() = default;
  explicit ValueTable(std::size_t arms) : stats_(arms) {}

  std::size_t size() const { return stats_.size(); }
  const ArmStats& arm(std::size_t i) const { return stats_.at(i); }
  std::span<const ArmStats> arms() const { return stats_; }
  void update(std::size_t arm, double reward) { stats_.at(arm).update(reward); }

  std::vector<double> scores(std::span<const std::size_t> candidates,
                             const ValueTable* fallback = nullptr) const;
  // Selects among `candidates`, returns the chosen arm index.
  std::size_t select(std::span<const std::size_t> candidates, double noise_scale, Rng& rng,
                     Phase phase, const ValueTable* fallback = nullptr) const;

  nlohmann::json to_json() const;
  static ValueTable from_json(const nlohmann::json& j);

 private:
  std::vector<ArmStats> stats_;
};

class OuterBandit {
 public:
  OuterBandit(std::vector<double> q_arms_mbps, NoiseSchedule schedule);

  double current_q() const { return arms_[current_]; }
  std::size_t current_arm() const { return current_; }
  std::span<const double> arms() const { return arms_; }
  const ValueTable& values() const { return table_; }
  double noise_scale() const { return noise_.scale(); }
  Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }

  // Picks an arm without crediting a reward (episode start).
  double reselect(Rng& rng);
  // Credits `reward` to the arm in force (train phase only) and picks the next Q.
  double step(std::optional<double> reward, Rng& rng);

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  std::vector<double> arms_;
  ValueTable table_;
  ExplorationNoise noise_;
  std::size_t current_ = 0;
  Phase phase_ = Phase::Train;
};

struct InnerContext {
  std::size_t sharing_ap = 0;
  std::size_t sharing_sta = 0;

  auto operator<=>(const InnerContext&) const = default;
};

class Level1Agent {
 public:
  Level1Agent(std::size_t n_aps, NoiseSchedule schedule);

  std::size_t n_aps() const { return n_aps_; }
  // 2^(N-1): one arm per subset of the candidate shared APs.
  std::size_t arm_count() const { return std::size_t{1} << (n_aps_ - 1); }
  // Candidate b is the b-th AP other than the sharing AP, ascending.
  std::vector<std::size_t> subset_aps(std::size_t sharing_ap, std::size_t arm) const;

  std::size_t select(const InnerContext& ctx, Rng& rng, Phase phase);
  void update(const InnerContext& ctx, std::size_t arm, double reward);

  const ValueTable* table(const InnerContext& ctx) const;
  double noise_scale() const { return noise_.scale(); }

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  ValueTable& table_for(const InnerContext& ctx);

  std::size_t n_aps_;
  ExplorationNoise noise_;
  std::map<InnerContext, ValueTable> tables_;
};

struct Level2Arm {
  std::size_t sta = 0;
  int power_level = 0;
  int mcs = 0;
};

class Level2Agent {
 public:
  Level2Agent(const Deployment& deployment, int power_levels, std::vector<int> mcs_set,
              NoiseSchedule schedule, const McsTable& table = McsTable::standard());

  // (#associated STAs) * d_t * (#selectable MCS).
  std::size_t arm_count(std::size_t ap) const;
  Level2Arm decode(std::size_t ap, std::size_t arm) const;
  std::span<const int> mcs_set() const { return mcs_set_; }

  struct Choice {
    std::size_t arm = 0;
    Level2Arm decoded;
    bool mask_fallback = false;
  };

  // `fixed_sta` restricts the arms to one STA (the sharing link). Arms whose
  // nominal rate at the threshold mean, R(m)/2, is below `qos_mask_mbps` are
  // masked; if that leaves nothing, only the lowest-rate MCS remains eligible.
  // Tables are kept per (context, level-1 subset arm, AP). A second table per
  // (context, AP), pooled over subsets, scores the arms a subset table has
  // not pulled yet.
  Choice select(const InnerContext& ctx, std::size_t subset, std::size_t ap,
                std::optional<std::size_t> fixed_sta, double qos_mask_mbps, Rng& rng, Phase phase);
  void update(const InnerContext& ctx, std::size_t subset, std::size_t ap, std::size_t arm,
              double reward);

  const ValueTable* table(const InnerContext& ctx, std::size_t subset, std::size_t ap) const;
  const ValueTable* pooled(const InnerContext& ctx, std::size_t ap) const;
  double noise_scale() const { return noise_.scale(); }

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;
  using PooledKey = std::tuple<std::size_t, std::size_t, std::size_t>;
  ValueTable& table_for(const InnerContext& ctx, std::size_t subset, std::size_t ap);
  ValueTable& pooled_for(const InnerContext& ctx, std::size_t ap);

  std::vector<std::vector<std::size_t>> stas_by_ap_;
  int power_levels_;
  std::vector<int> mcs_set_;
  std::vector<double> mcs_rate_;
  int fallback_mcs_slot_ = 0;
  ExplorationNoise noise_;
  std::map<Key, ValueTable> tables_;
  std::map<PooledKey, ValueTable> pooled_;
};

struct InnerDecision {
  TxopAction action;
  InnerContext ctx;
  std::size_t level1_arm = 0;
  std::vector<std::pair<std::size_t, std::size_t>> level2_arms;  // (AP, arm)
  std::size_t mask_fallbacks = 0;
};

InnerDecision inner_select(Level1Agent& l1, Level2Agent& l2, const TxopContext& txop,
                           double current_q, QosScope mask_scope, const Deployment& deployment,
                           Rng& rng, Phase phase);

// No-op in eval phase.
void inner_update(Level1Agent& l1, Level2Agent& l2, const InnerDecision& decision,
                  double per_txop_reward, Phase phase);

// Sum rate minus Q for every flagged link.
double penalized_sum_rate(const TxopOutcome& outcome, double q_mbps);

// Highest-threshold selectable MCS whose mean SINR is <= sinr_db; MCS 15 otherwise.
int greedy_mcs(double sinr_db, const McsTable& table = McsTable::standard());

// ---------------------------------------------------------------------------
// Policies driven by run_episode.

// Per-TXOP signal the inner agents learn from.
//   PenalizedSumRate    sum rate minus Q per violated link.
//   ObjectiveMarginal   first-order gain of the episode objective from this
//                       TXOP's per-AP rates, at exponentially averaged per-AP rates
//                       (Jain gradient plus alpha-weighted throughput for the
//                       weighted sum; normalized 1/average weights for PF),
//                       minus the same QoS penalty.
enum class InnerReward { PenalizedSumRate, ObjectiveMarginal };

std::string to_string(InnerReward r);
InnerReward inner_reward_from_string(const std::string& s);

// Gradient of Jain's index at `averages`; zeros when every average is zero.
std::vector<double> jain_gradient(std::span<const double> averages);

// Normalized PF weights (1/A_j) / mean_i(1/A_i), averages floored at the PF floor.
std::vector<double> proportional_weights(std::span<const double> averages);

struct HierarchyConfig {
  RewardKind reward_kind = RewardKind::WeightedSum;
  InnerReward inner_reward = InnerReward::ObjectiveMarginal;
  double alpha = 0.02;
  // Time constant (TXOPs) of the per-AP rate average the marginal is taken at.
  std::size_t average_txops = 50;
  std::vector<double> q_arms_mbps{0, 4, 9, 17, 26, 34, 52};
  NoiseSchedule outer_noise;
  NoiseSchedule inner_noise;
  std::vector<int> mcs_set;  // empty: every selectable MCS of the table
  // Bandit rewards are divided by this (Mb/s); 0 means the largest MCS rate.
  double reward_scale_mbps = 0.0;

  void validate() const;
};

class HierarchicalPolicy : public Policy {
 public:
  HierarchicalPolicy(const Deployment& deployment, const SimParams& params, HierarchyConfig config,
                     Rng rng, const McsTable& table = McsTable::standard());

  std::string name() const override;
  TxopAction act(const TxopContext& ctx) override;
  void observe(const TxopAction& action, const TxopOutcome& outcome) override;
  double qos_target() const override { return outer_.current_q(); }
  void end_window(std::optional<double> reward) override;

  Phase phase() const { return phase_; }
  void set_phase(Phase p);
  std::size_t mask_fallbacks() const { return mask_fallbacks_; }
  const OuterBandit& outer() const { return outer_; }
  const Level1Agent& level1() const { return l1_; }
  const Level2Agent& level2() const { return l2_; }
  double reward_scale() const { return reward_scale_; }

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

  // Inner-agent reward for `outcome` given the per-AP totals observed so far.
  double inner_reward(const TxopOutcome& outcome) const;

 private:
  const Deployment* deployment_;
  HierarchyConfig config_;
  Rng rng_;
  OuterBandit outer_;
  Level1Agent l1_;
  Level2Agent l2_;
  double reward_scale_;
  Phase phase_ = Phase::Train;
  std::optional<InnerDecision> pending_;
  std::size_t mask_fallbacks_ = 0;
  std::vector<double> totals_;  // per-AP exponentially averaged rates
  std::size_t observed_ = 0;
};

// Reconstructed sum-rate MAB baseline: learns only the shared-AP subset per
// context; every active AP at the top power level, STA of each shared AP drawn
// uniformly, MCS picked greedily from the predicted SINR.
class SumRateBaselinePolicy : public Policy {
 public:
  SumRateBaselinePolicy(const Deployment& deployment, const SimParams& params, NoiseSchedule noise,
                        Rng rng, const McsTable& table = McsTable::standard());

  std::string name() const override { return "baseline"; }
  TxopAction act(const TxopContext& ctx) override;
  void observe(const TxopAction& action, const TxopOutcome& outcome) override;

  Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }
  const Level1Agent& level1() const { return l1_; }

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

 private:
  const Deployment* deployment_;
  const SimParams* params_;
  const McsTable* table_;
  Rng rng_;
  Level1Agent l1_;
  double reward_scale_;
  Phase phase_ = Phase::Train;
  std::optional<std::pair<InnerContext, std::size_t>> pending_;
};

// No MAPC: only the sharing link, top power level, greedy MCS.
class SingleApPolicy : public Policy {
 public:
  SingleApPolicy(const Deployment& deployment, const SimParams& params,
                 const McsTable& table = McsTable::standard());

  std::string name() const override { return "single_ap"; }
  TxopAction act(const TxopContext& ctx) override;

 private:
  const Deployment* deployment_;
  const SimParams* params_;
  const McsTable* table_;
};

// Fills MCS greedily from the SINRs predicted for `action`'s active links.
void assign_greedy_mcs(TxopAction& action, const Deployment& deployment, const SimParams& params,
                       const McsTable& table);

}  // namespace mapc
