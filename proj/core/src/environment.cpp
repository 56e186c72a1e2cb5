#include "mapc/environment.hpp"

#include <cmath>
#include <numeric>

#include "mapc/errors.hpp"

namespace mapc {

void SimParams::validate() const {
  if (horizon_txops == 0) throw ConfigError("horizon_txops must be > 0");
  if (!(txop_duration_s > 0.0)) throw ConfigError("txop_duration_s must be > 0");
  if (!(frame_bits > 0.0)) throw ConfigError("frame size must be > 0");
  channel.validate();
  grid.validate();
}

void RewardConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (window_txops < 1) throw ConfigError("reward window must be >= 1 TXOP");
  if (!(qos_target_mbps >= 0.0)) throw ConfigError("QoS target must be >= 0");
}

std::size_t TxopAction::active_count() const {
  std::size_t n = 0;
  for (const auto& slot : per_ap_schedule)
    if (slot && slot->active()) ++n;
  return n;
}

QosScope qos_scope_for(RewardKind kind) {
  return kind == RewardKind::WeightedSum ? QosScope::AllLinks : QosScope::SharingLink;
}

std::string to_string(RewardKind kind) {
  return kind == RewardKind::WeightedSum ? "weighted_sum" : "proportional";
}

RewardKind reward_kind_from_string(const std::string& s) {
  if (s == "weighted_sum") return RewardKind::WeightedSum;
  if (s == "proportional") return RewardKind::Proportional;
  throw ConfigError("unknown reward kind: " + s);
}

std::size_t sharing_ap_for(std::size_t txop, std::size_t n_aps) {
  if (n_aps == 0) throw ConfigError("round robin needs at least one AP");
  return txop % n_aps;
}

std::size_t sample_scheduled_sta(std::size_t sharing_ap, const Deployment& deployment, Rng& rng) {
  const auto stas = deployment.stas_of(sharing_ap);
  if (stas.empty())
    throw SchedulingError("AP " + std::to_string(sharing_ap) + " has no associated STA");
  std::uniform_int_distribution<std::size_t> pick(0, stas.size() - 1);
  return stas[pick(rng)];
}

void validate_action(const TxopAction& action, const Deployment& deployment,
                     const SimParams& params, const McsTable& mcs) {
  const std::size_t n = deployment.n_aps();
  if (action.per_ap_schedule.size() != n)
    throw InvalidActionError("schedule has " + std::to_string(action.per_ap_schedule.size()) +
                             " slots for " + std::to_string(n) + " APs");
  if (action.sharing_ap >= n) throw InvalidActionError("sharing AP index out of range");
  const auto& sharing = action.per_ap_schedule[action.sharing_ap];
  if (!sharing) throw InvalidActionError("sharing AP has no schedule entry");
  if (sharing->sta != action.sharing_sta)
    throw InvalidActionError("sharing AP must serve the scheduled STA");
  for (std::size_t j = 0; j < n; ++j) {
    const auto& slot = action.per_ap_schedule[j];
    if (!slot) continue;
    if (slot->sta >= deployment.n_stas())
      throw InvalidActionError("STA index out of range on AP " + std::to_string(j));
    if (deployment.association[slot->sta] != j)
      throw InvalidActionError("STA " + std::to_string(slot->sta) + " is not associated with AP " +
                               std::to_string(j));
    if (!slot->active()) continue;
    if (*slot->power_level < 0 || *slot->power_level >= params.grid.num_levels)
      throw IndexError("power level " + std::to_string(*slot->power_level) + " outside grid on AP " +
                       std::to_string(j));
    if (!mcs.at(slot->mcs).selectable())
      throw UnsupportedMcsError("MCS " + std::to_string(slot->mcs) + " is not selectable (AP " +
                                std::to_string(j) + ")");
  }
}

std::vector<double> link_sinrs_db(const TxopAction& action, const Deployment& deployment,
                                  const SimParams& params) {
  struct Tx {
    std::size_t ap;
    std::size_t sta;
    double power_dbm;
  };
  std::vector<Tx> active;
  for (std::size_t j = 0; j < action.per_ap_schedule.size(); ++j) {
    const auto& slot = action.per_ap_schedule[j];
    if (slot && slot->active())
      active.push_back({j, slot->sta, power_level_dbm(*slot->power_level, params.grid)});
  }
  std::vector<double> out;
  out.reserve(active.size());
  std::vector<double> interference;
  for (const auto& link : active) {
    interference.clear();
    for (const auto& other : active) {
      if (other.ap == link.ap) continue;
      interference.push_back(dbm_to_mw(other.power_dbm - deployment.gain_db.loss_db(other.ap, link.sta)));
    }
    const double signal = link.power_dbm - deployment.gain_db.loss_db(link.ap, link.sta);
    out.push_back(sinr_db(signal, interference, params.channel.noise_power_dbm));
  }
  return out;
}

TxopOutcome apply_action(const TxopAction& action, const Deployment& deployment,
                         const SimParams& params, double qos_mbps, QosScope scope,
                         const McsTable& mcs, Rng* frame_rng) {
  validate_action(action, deployment, params, mcs);
  if (params.stochastic_frames && frame_rng == nullptr)
    throw ConfigError("stochastic frame mode needs a frame RNG");

  const auto sinrs = link_sinrs_db(action, deployment, params);
  TxopOutcome out;
  out.per_ap_rate.assign(deployment.n_aps(), 0.0);
  std::size_t link_idx = 0;
  for (std::size_t j = 0; j < action.per_ap_schedule.size(); ++j) {
    const auto& slot = action.per_ap_schedule[j];
    if (!slot || !slot->active()) continue;
    const McsEntry& entry = mcs.at(slot->mcs);
    LinkOutcome link;
    link.ap = j;
    link.sta = slot->sta;
    link.mcs = slot->mcs;
    link.tx_power_dbm = power_level_dbm(*slot->power_level, params.grid);
    link.sinr_db = sinrs[link_idx++];
    link.success_prob = success_probability(link.sinr_db, entry, params.channel.mcs_sigma_db);
    if (params.stochastic_frames) {
      link.frames = static_cast<double>(sample_delivered_frames(
          entry, link.sinr_db, params.channel, params.txop_duration_s, params.frame_bits, *frame_rng));
      link.rate_mbps = rate_from_frames(link.frames, params.txop_duration_s, params.frame_bits);
    } else {
      link.rate_mbps = effective_link_rate(entry, link.sinr_db, params.channel);
      link.frames = frames_per_txop(link.rate_mbps, params.txop_duration_s, params.frame_bits);
    }
    out.per_ap_rate[j] += link.rate_mbps;
    out.sum_rate_mbps += link.rate_mbps;
    const bool checked = scope == QosScope::AllLinks || j == action.sharing_ap;
    if (checked && link.rate_mbps < qos_mbps) out.qos_violations.push_back(out.per_link.size());
    out.per_link.push_back(link);
  }
  return out;
}

std::optional<double> jain_index(std::span<const double> totals) {
  if (totals.empty()) throw DomainError("Jain's index needs at least one value");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : totals) {
    if (x < 0.0 || !std::isfinite(x)) throw DomainError("Jain's index needs finite non-negative values");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) return std::nullopt;
  return sum * sum / (static_cast<double>(totals.size()) * sum_sq);
}

std::optional<double> reward_weighted_sum(const RewardWindow& window, double alpha,
                                          double max_rate_mbps) {
  if (window.per_ap_totals.empty() || window.txops == 0)
    throw DomainError("weighted-sum reward needs a non-empty window");
  const double n = static_cast<double>(window.per_ap_totals.size());
  const double total = std::accumulate(window.per_ap_totals.begin(), window.per_ap_totals.end(), 0.0);
  const double throughput = total / static_cast<double>(window.txops) / (n * max_rate_mbps);
  if (alpha == 1.0) return throughput;
  const auto jain = jain_index(window.per_ap_totals);
  if (!jain) return std::nullopt;
  return alpha * throughput + (1.0 - alpha) * *jain;
}

double reward_proportional(std::span<const double> per_ap_totals) {
  double acc = 0.0;
  for (double x : per_ap_totals) acc += std::log(std::max(x, kProportionalFloorMbps));
  return acc;
}

std::optional<double> windowed_reward(const RewardWindow& window, const RewardConfig& config,
                                      double max_rate_mbps) {
  if (config.kind == RewardKind::WeightedSum)
    return reward_weighted_sum(window, config.alpha, max_rate_mbps);
  return reward_proportional(window.per_ap_totals);
}

std::vector<double> EpisodeTrace::cumulative_per_ap() const {
  std::vector<double> totals(n_aps, 0.0);
  for (const auto& r : records)
    for (std::size_t j = 0; j < n_aps && j < r.per_ap_rate.size(); ++j) totals[j] += r.per_ap_rate[j];
  return totals;
}

EpisodeTrace run_episode(Policy& policy, const Deployment& deployment, const SimParams& params,
                         const EpisodeOptions& options, Rng& sta_rng) {
  params.validate();
  options.reward.validate();
  const McsTable& mcs = options.mcs ? *options.mcs : McsTable::standard();
  const std::size_t n = deployment.n_aps();
  const QosScope scope = qos_scope_for(options.reward.kind);

  EpisodeTrace trace;
  trace.algorithm = policy.name();
  trace.deployment_hash = deployment_hash(deployment);
  trace.seed = deployment.seed;
  trace.n_aps = n;
  trace.reward_kind = options.reward.kind;
  trace.window_txops = options.reward.window_txops;
  trace.topology_resamples = deployment.resample_count;
  trace.records.reserve(params.horizon_txops);

  RewardWindow window{std::vector<double>(n, 0.0), 0};
  for (std::size_t k = 0; k < params.horizon_txops; ++k) {
    TxopContext ctx{k, sharing_ap_for(k, n), 0};
    TxopRecord rec;
    try {
      ctx.sharing_sta = sample_scheduled_sta(ctx.sharing_ap, deployment, sta_rng);
      rec.current_q = policy.qos_target();
      TxopAction action = policy.act(ctx);
      if (action.txop_index != k || action.sharing_ap != ctx.sharing_ap ||
          action.sharing_sta != ctx.sharing_sta)
        throw InvalidActionError("action does not match the TXOP context");
      TxopOutcome outcome =
          apply_action(action, deployment, params, rec.current_q, scope, mcs, options.frame_rng);
      policy.observe(action, outcome);

      rec.txop = k;
      rec.sharing_ap = ctx.sharing_ap;
      rec.scheduled_sta = ctx.sharing_sta;
      rec.active_ap_count = outcome.per_link.size();
      rec.sum_rate_mbps = outcome.sum_rate_mbps;
      rec.per_ap_rate = outcome.per_ap_rate;
      rec.qos_violations = outcome.qos_violations.size();

      for (std::size_t j = 0; j < n; ++j) window.per_ap_totals[j] += outcome.per_ap_rate[j];
      ++window.txops;
      if (window.txops == options.reward.window_txops) {
        rec.windowed_reward = windowed_reward(window, options.reward, mcs.max_rate_mbps());
        policy.end_window(rec.windowed_reward);
        window = RewardWindow{std::vector<double>(n, 0.0), 0};
      }
    } catch (const EpisodeAbort&) {
      throw;
    } catch (const std::exception& e) {
      throw EpisodeAbort(k, e.what());
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace mapc
