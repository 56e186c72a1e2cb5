#pragma once

// Per-TXOP world model. A TxopAction fixes who transmits to whom, at which
// power level and MCS; apply_action turns it into SINRs, expected frames and
// rates. run_episode drives a Policy over K TXOPs and evaluates the windowed
// weighted-sum / proportional-fairness rewards.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapc/channel.hpp"
#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

namespace mapc {

struct SimParams {
  std::size_t horizon_txops = 5000;  // K
  double txop_duration_s = 5.484e-3;
  double frame_bits = 1500.0 * 8.0;
  ChannelParams channel;
  PowerGrid grid;
  bool stochastic_frames = false;

  void validate() const;
};

struct ApAssignment {
  std::size_t sta = 0;
  std::optional<int> power_level;  // nullopt: AP stays silent this TXOP
  int mcs = 0;

  bool active() const { return power_level.has_value(); }
};

struct TxopAction {
  std::size_t txop_index = 0;
  std::size_t sharing_ap = 0;
  std::size_t sharing_sta = 0;
  // Indexed by AP; an empty slot means the AP is not scheduled.
  std::vector<std::optional<ApAssignment>> per_ap_schedule;

  std::size_t active_count() const;
};

struct TxopContext {
  std::size_t txop_index = 0;
  std::size_t sharing_ap = 0;
  std::size_t sharing_sta = 0;
};

struct LinkOutcome {
  std::size_t ap = 0;
  std::size_t sta = 0;
  int mcs = 0;
  double tx_power_dbm = 0.0;
  double sinr_db = 0.0;
  double success_prob = 0.0;
  double frames = 0.0;
  double rate_mbps = 0.0;
};

struct TxopOutcome {
  std::vector<LinkOutcome> per_link;   // ordered by AP index
  std::vector<double> per_ap_rate;     // R_{j,k}, size N
  std::vector<std::size_t> qos_violations;  // indices into per_link
  double sum_rate_mbps = 0.0;
};

enum class RewardKind { WeightedSum, Proportional };

// Weighted-sum constrains every active link, proportional only the sharing link.
enum class QosScope { AllLinks, SharingLink };

QosScope qos_scope_for(RewardKind kind);
std::string to_string(RewardKind kind);
RewardKind reward_kind_from_string(const std::string& s);

struct RewardConfig {
  RewardKind kind = RewardKind::WeightedSum;
  double alpha = 0.02;
  double qos_target_mbps = 0.0;  // initial Q
  std::size_t window_txops = 50;  // T_outer

  void validate() const;
};

inline constexpr double kProportionalFloorMbps = 1e-3;

std::size_t sharing_ap_for(std::size_t txop, std::size_t n_aps);

std::size_t sample_scheduled_sta(std::size_t sharing_ap, const Deployment& deployment, Rng& rng);

// Throws InvalidActionError describing the first broken invariant.
void validate_action(const TxopAction& action, const Deployment& deployment,
                     const SimParams& params, const McsTable& mcs = McsTable::standard());

// SINR (dB) of every active link in AP order, interference from all other
// active links. Used by apply_action and by policies that predict SINR.
std::vector<double> link_sinrs_db(const TxopAction& action, const Deployment& deployment,
                                  const SimParams& params);

TxopOutcome apply_action(const TxopAction& action, const Deployment& deployment,
                         const SimParams& params, double qos_mbps,
                         QosScope scope = QosScope::AllLinks,
                         const McsTable& mcs = McsTable::standard(), Rng* frame_rng = nullptr);

// Jain's index; nullopt when every total is zero.
std::optional<double> jain_index(std::span<const double> totals);

struct RewardWindow {
  std::vector<double> per_ap_totals;  // sum over the window's TXOPs of R_{j,k}
  std::size_t txops = 0;
};

// Throughput term is the mean per-TXOP sum rate divided by N * max_rate_mbps.
std::optional<double> reward_weighted_sum(const RewardWindow& window, double alpha,
                                          double max_rate_mbps);

double reward_proportional(std::span<const double> per_ap_totals);

std::optional<double> windowed_reward(const RewardWindow& window, const RewardConfig& config,
                                      double max_rate_mbps);

// The action source driven by run_episode. Policies own their learning state
// and random streams.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual TxopAction act(const TxopContext& ctx) = 0;
  virtual void observe(const TxopAction& /*action*/, const TxopOutcome& /*outcome*/) {}
  // Q in force for the next TXOP.
  virtual double qos_target() const { return 0.0; }
  // Called at the end of each T_outer window with the windowed reward.
  virtual void end_window(std::optional<double> /*reward*/) {}
};

struct TxopRecord {
  std::size_t txop = 0;
  std::size_t sharing_ap = 0;
  std::size_t scheduled_sta = 0;
  std::size_t active_ap_count = 0;
  double sum_rate_mbps = 0.0;
  std::vector<double> per_ap_rate;
  std::size_t qos_violations = 0;
  std::optional<double> windowed_reward;
  double current_q = 0.0;
};

struct EpisodeTrace {
  std::string algorithm;
  std::string deployment_hash;
  std::uint64_t seed = 0;
  std::size_t n_aps = 0;
  RewardKind reward_kind = RewardKind::WeightedSum;
  std::size_t window_txops = 50;
  int topology_resamples = 0;
  std::size_t mask_fallbacks = 0;
  std::vector<TxopRecord> records;

  std::vector<double> cumulative_per_ap() const;
};

struct EpisodeOptions {
  RewardConfig reward;
  const McsTable* mcs = nullptr;  // defaults to the standard table
  Rng* frame_rng = nullptr;       // required when params.stochastic_frames
};

EpisodeTrace run_episode(Policy& policy, const Deployment& deployment, const SimParams& params,
                         const EpisodeOptions& options, Rng& sta_rng);

}  // namespace mapc
