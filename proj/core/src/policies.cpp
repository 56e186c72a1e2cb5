#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"
#include "mapc/optimizer.hpp"

namespace mapc {

std::string to_string(InnerReward r) {
  return r == InnerReward::PenalizedSumRate ? "penalized_sum_rate" : "objective_marginal";
}

InnerReward inner_reward_from_string(const std::string& s) {
  if (s == "penalized_sum_rate") return InnerReward::PenalizedSumRate;
  if (s == "objective_marginal") return InnerReward::ObjectiveMarginal;
  throw ConfigError("unknown inner reward '" + s + "'");
}

std::vector<double> jain_gradient(std::span<const double> a) {
  std::vector<double> g(a.size(), 0.0);
  double s = 0.0, q = 0.0;
  for (double x : a) {
    s += x;
    q += x * x;
  }
  if (q <= 0.0) return g;
  const double n = static_cast<double>(a.size());
  // J = s^2 / (n q)
  for (std::size_t j = 0; j < a.size(); ++j) g[j] = 2.0 * s / (n * q) * (1.0 - s * a[j] / q);
  return g;
}

std::vector<double> proportional_weights(std::span<const double> a) {
  std::vector<double> w(a.size());
  double mean_inv = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    w[j] = 1.0 / std::max(a[j], kProportionalFloorMbps);
    mean_inv += w[j];
  }
  mean_inv /= static_cast<double>(a.size());
  for (double& x : w) x /= mean_inv;
  return w;
}

void HierarchyConfig::validate() const {
  if (q_arms_mbps.empty()) throw ConfigError("Q arm set must not be empty");
  for (double q : q_arms_mbps)
    if (!(q >= 0.0)) throw ConfigError("Q arms must be >= 0");
  outer_noise.validate();
  inner_noise.validate();
  if (reward_scale_mbps < 0.0) throw ConfigError("reward scale must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (average_txops < 1) throw ConfigError("rate average time constant must be >= 1 TXOP");
}

void assign_greedy_mcs(TxopAction& action, const Deployment& deployment, const SimParams& params,
                       const McsTable& table) {
  const auto sinrs = link_sinrs_db(action, deployment, params);
  std::size_t i = 0;
  for (auto& slot : action.per_ap_schedule)
    if (slot && slot->active()) slot->mcs = greedy_mcs(sinrs[i++], table);
}

// ---------------------------------------------------------------------------

HierarchicalPolicy::HierarchicalPolicy(const Deployment& deployment, const SimParams& params,
                                       HierarchyConfig config, Rng rng, const McsTable& table)
    : deployment_(&deployment),
      config_(std::move(config)),
      rng_(std::move(rng)),
      outer_(config_.q_arms_mbps, config_.outer_noise),
      l1_(deployment.n_aps(), config_.inner_noise),
      l2_(deployment, params.grid.num_levels, config_.mcs_set, config_.inner_noise, table) {
  config_.validate();
  if (config_.reward_scale_mbps > 0.0) {
    reward_scale_ = config_.reward_scale_mbps;
  } else {
    reward_scale_ = 0.0;
    for (int m : l2_.mcs_set()) reward_scale_ = std::max(reward_scale_, *table.at(m).data_rate_mbps);
  }
  totals_.assign(deployment.n_aps(), 0.0);
  outer_.reselect(rng_);
}

double HierarchicalPolicy::inner_reward(const TxopOutcome& outcome) const {
  const double q = outer_.current_q();
  if (config_.inner_reward == InnerReward::PenalizedSumRate)
    return penalized_sum_rate(outcome, q) / reward_scale_;

  const double penalty = q * static_cast<double>(outcome.qos_violations.size()) / reward_scale_;
  const auto& avg = totals_;
  const auto& r = outcome.per_ap_rate;
  double gain = 0.0;
  if (config_.reward_kind == RewardKind::WeightedSum) {
    const auto g = jain_gradient(avg);
    const double n = static_cast<double>(r.size());
    double jain_term = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) jain_term += g[j] * r[j];
    gain = config_.alpha * outcome.sum_rate_mbps / (n * reward_scale_) + (1.0 - config_.alpha) * jain_term;
  } else {
    const auto w = proportional_weights(avg);
    for (std::size_t j = 0; j < r.size(); ++j) gain += w[j] * r[j];
    gain /= reward_scale_;
  }
  return gain - penalty;
}

std::string HierarchicalPolicy::name() const {
  return config_.reward_kind == RewardKind::WeightedSum ? "hier_weighted" : "hier_proportional";
}

void HierarchicalPolicy::set_phase(Phase p) {
  phase_ = p;
  outer_.set_phase(p);
  if (p == Phase::Eval) outer_.reselect(rng_);
}

TxopAction HierarchicalPolicy::act(const TxopContext& ctx) {
  InnerDecision d = inner_select(l1_, l2_, ctx, outer_.current_q(),
                                 qos_scope_for(config_.reward_kind), *deployment_, rng_, phase_);
  mask_fallbacks_ += d.mask_fallbacks;
  TxopAction action = d.action;
  pending_ = std::move(d);
  return action;
}

void HierarchicalPolicy::observe(const TxopAction& action, const TxopOutcome& outcome) {
  if (!pending_ || pending_->action.txop_index != action.txop_index)
    throw Error("observe() without a matching act()");
  inner_update(l1_, l2_, *pending_, inner_reward(outcome), phase_);
  // Exponential average over roughly one outer window; the first TXOP seeds it.
  const double w = observed_ == 0 ? 1.0 : 1.0 / static_cast<double>(config_.average_txops);
  for (std::size_t j = 0; j < totals_.size(); ++j)
    totals_[j] += w * (outcome.per_ap_rate[j] - totals_[j]);
  ++observed_;
  pending_.reset();
}

void HierarchicalPolicy::end_window(std::optional<double> reward) {
  outer_.step(reward, rng_);
}

nlohmann::json HierarchicalPolicy::checkpoint() const {
  return {{"policy", name()},
          {"reward_scale_mbps", reward_scale_},
          {"mask_fallbacks", mask_fallbacks_},
          {"inner_reward", to_string(config_.inner_reward)},
          {"observed_txops", observed_},
          {"per_ap_totals_mbps", totals_},
          {"outer", outer_.to_json()},
          {"level1", l1_.to_json()},
          {"level2", l2_.to_json()}};
}

void HierarchicalPolicy::restore(const nlohmann::json& j) {
  if (j.at("policy").get<std::string>() != name())
    throw ConfigError("checkpoint belongs to policy '" + j.at("policy").get<std::string>() + "'");
  outer_.load_json(j.at("outer"));
  l1_.load_json(j.at("level1"));
  l2_.load_json(j.at("level2"));
  if (j.contains("per_ap_totals_mbps")) {
    auto t = j.at("per_ap_totals_mbps").get<std::vector<double>>();
    if (t.size() != totals_.size()) throw ConfigError("checkpoint AP count does not match deployment");
    totals_ = std::move(t);
    observed_ = j.at("observed_txops").get<std::size_t>();
  }
}

// ---------------------------------------------------------------------------

SumRateBaselinePolicy::SumRateBaselinePolicy(const Deployment& deployment, const SimParams& params,
                                             NoiseSchedule noise, Rng rng, const McsTable& table)
    : deployment_(&deployment),
      params_(&params),
      table_(&table),
      rng_(std::move(rng)),
      l1_(deployment.n_aps(), noise),
      reward_scale_(table.max_rate_mbps()) {}

TxopAction SumRateBaselinePolicy::act(const TxopContext& ctx) {
  const InnerContext ictx{ctx.sharing_ap, ctx.sharing_sta};
  const std::size_t arm = l1_.select(ictx, rng_, phase_);
  const int top = params_->grid.max_level();

  TxopAction action;
  action.txop_index = ctx.txop_index;
  action.sharing_ap = ctx.sharing_ap;
  action.sharing_sta = ctx.sharing_sta;
  action.per_ap_schedule.assign(deployment_->n_aps(), std::nullopt);
  action.per_ap_schedule[ctx.sharing_ap] = ApAssignment{ctx.sharing_sta, top, 0};
  for (std::size_t ap : l1_.subset_aps(ctx.sharing_ap, arm)) {
    const auto stas = deployment_->stas_of(ap);
    std::uniform_int_distribution<std::size_t> pick(0, stas.size() - 1);
    action.per_ap_schedule[ap] = ApAssignment{stas[pick(rng_)], top, 0};
  }
  assign_greedy_mcs(action, *deployment_, *params_, *table_);
  pending_ = std::make_pair(ictx, arm);
  return action;
}

void SumRateBaselinePolicy::observe(const TxopAction& /*action*/, const TxopOutcome& outcome) {
  if (!pending_) throw Error("observe() without a matching act()");
  if (phase_ == Phase::Train) l1_.update(pending_->first, pending_->second, outcome.sum_rate_mbps / reward_scale_);
  pending_.reset();
}

nlohmann::json SumRateBaselinePolicy::checkpoint() const {
  return {{"policy", name()}, {"level1", l1_.to_json()}};
}

void SumRateBaselinePolicy::restore(const nlohmann::json& j) {
  if (j.at("policy").get<std::string>() != name())
    throw ConfigError("checkpoint belongs to policy '" + j.at("policy").get<std::string>() + "'");
  l1_.load_json(j.at("level1"));
}

// ---------------------------------------------------------------------------

SingleApPolicy::SingleApPolicy(const Deployment& deployment, const SimParams& params,
                               const McsTable& table)
    : deployment_(&deployment), params_(&params), table_(&table) {}

TxopAction SingleApPolicy::act(const TxopContext& ctx) {
  TxopAction action;
  action.txop_index = ctx.txop_index;
  action.sharing_ap = ctx.sharing_ap;
  action.sharing_sta = ctx.sharing_sta;
  action.per_ap_schedule.assign(deployment_->n_aps(), std::nullopt);
  action.per_ap_schedule[ctx.sharing_ap] = ApAssignment{ctx.sharing_sta, params_->grid.max_level(), 0};
  assign_greedy_mcs(action, *deployment_, *params_, *table_);
  return action;
}

}  // namespace mapc
