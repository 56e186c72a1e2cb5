#include "mapc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"

namespace mapc {

std::string to_string(Phase p) { return p == Phase::Train ? "train" : "eval"; }

Phase phase_from_string(const std::string& s) {
  if (s == "train") return Phase::Train;
  if (s == "eval") return Phase::Eval;
  throw ConfigError("mode must be 'train' or 'eval', got '" + s + "'");
}

void NoiseSchedule::validate() const {
  if (!(initial >= 0.0)) throw ConfigError("noise initial scale must be >= 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("noise decay must lie in (0, 1]");
  if (!(floor >= 0.0)) throw ConfigError("noise floor must be >= 0");
}

void ExplorationNoise::step() { scale_ = std::max(schedule_.floor, scale_ * schedule_.decay); }

std::size_t select_with_noise(std::span<const double> values, double noise_scale, Rng& rng,
                              Phase phase) {
  if (values.empty()) throw DomainError("cannot select from an empty arm set");
  const bool perturb = phase == Phase::Train && noise_scale > 0.0;
  std::normal_distribution<double> noise(0.0, perturb ? noise_scale : 1.0);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double score = perturb ? values[i] + noise(rng) : values[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// ValueTable

std::vector<double> ValueTable::scores(std::span<const std::size_t> candidates,
                                       const ValueTable* fallback) const {
  double prior = 0.0;
  std::size_t pulled = 0;
  for (const auto& a : stats_) {
    if (a.count > 0) {
      prior += a.mean;
      ++pulled;
    }
  }
  if (pulled > 0) prior /= static_cast<double>(pulled);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (auto c : candidates) {
    const auto& a = stats_.at(c);
    out.push_back(a.count > 0 ? a.mean : prior);
  }
  if (fallback) {
    const auto backup = fallback->scores(candidates);
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (stats_.at(candidates[i]).count == 0) out[i] = backup[i];
  }
  return out;
}

std::size_t ValueTable::select(std::span<const std::size_t> candidates, double noise_scale, Rng& rng,
                               Phase phase, const ValueTable* fallback) const {
  const auto s = scores(candidates, fallback);
  return candidates[select_with_noise(s, noise_scale, rng, phase)];
}

nlohmann::json ValueTable::to_json() const {
  std::vector<double> means;
  std::vector<std::uint64_t> counts;
  for (const auto& a : stats_) {
    means.push_back(a.mean);
    counts.push_back(a.count);
  }
  return {{"mean", means}, {"count", counts}};
}

ValueTable ValueTable::from_json(const nlohmann::json& j) {
  auto means = j.at("mean").get<std::vector<double>>();
  auto counts = j.at("count").get<std::vector<std::uint64_t>>();
  if (means.size() != counts.size()) throw ConfigError("value table mean/count length mismatch");
  ValueTable t(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) t.stats_[i] = ArmStats{means[i], counts[i]};
  return t;
}

// ---------------------------------------------------------------------------
// Outer bandit

OuterBandit::OuterBandit(std::vector<double> q_arms_mbps, NoiseSchedule schedule)
    : arms_(std::move(q_arms_mbps)), table_(arms_.size()), noise_(schedule) {
  if (arms_.empty()) throw ConfigError("outer bandit needs at least one Q arm");
  for (double q : arms_)
    if (!(q >= 0.0)) throw ConfigError("Q arms must be >= 0");
  schedule.validate();
}

double OuterBandit::reselect(Rng& rng) {
  std::vector<std::size_t> all(arms_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  current_ = table_.select(all, noise_.scale(), rng, phase_);
  if (phase_ == Phase::Train) noise_.step();
  return current_q();
}

double OuterBandit::step(std::optional<double> reward, Rng& rng) {
  if (phase_ == Phase::Train && reward) {
    if (!std::isfinite(*reward)) throw DomainError("outer bandit reward must be finite");
    table_.update(current_, *reward);
  }
  return reselect(rng);
}

nlohmann::json OuterBandit::to_json() const {
  return {{"arms_mbps", arms_},
          {"values", table_.to_json()},
          {"noise_scale", noise_.scale()},
          {"current_arm", current_}};
}

void OuterBandit::load_json(const nlohmann::json& j) {
  if (j.at("arms_mbps").get<std::vector<double>>() != arms_)
    throw ConfigError("checkpoint Q arms differ from the configured arms");
  auto t = ValueTable::from_json(j.at("values"));
  if (t.size() != arms_.size()) throw ConfigError("checkpoint outer table has the wrong size");
  table_ = std::move(t);
  noise_.set_scale(j.at("noise_scale").get<double>());
  current_ = j.at("current_arm").get<std::size_t>();
  if (current_ >= arms_.size()) throw ConfigError("checkpoint current arm out of range");
}

// ---------------------------------------------------------------------------
// Level 1

Level1Agent::Level1Agent(std::size_t n_aps, NoiseSchedule schedule) : n_aps_(n_aps), noise_(schedule) {
  if (n_aps == 0) throw ConfigError("level-1 agent needs at least one AP");
  if (n_aps > 16) throw ConfigError("level-1 subset enumeration supports at most 16 APs");
  schedule.validate();
}

std::vector<std::size_t> Level1Agent::subset_aps(std::size_t sharing_ap, std::size_t arm) const {
  if (arm >= arm_count()) throw IndexError("level-1 arm out of range");
  std::vector<std::size_t> out;
  std::size_t bit = 0;
  for (std::size_t j = 0; j < n_aps_; ++j) {
    if (j == sharing_ap) continue;
    if (arm & (std::size_t{1} << bit)) out.push_back(j);
    ++bit;
  }
  return out;
}

ValueTable& Level1Agent::table_for(const InnerContext& ctx) {
  auto it = tables_.find(ctx);
  if (it == tables_.end()) it = tables_.emplace(ctx, ValueTable(arm_count())).first;
  return it->second;
}

const ValueTable* Level1Agent::table(const InnerContext& ctx) const {
  auto it = tables_.find(ctx);
  return it == tables_.end() ? nullptr : &it->second;
}

std::size_t Level1Agent::select(const InnerContext& ctx, Rng& rng, Phase phase) {
  if (ctx.sharing_ap >= n_aps_) throw IndexError("sharing AP out of range");
  std::vector<std::size_t> all(arm_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::size_t arm = table_for(ctx).select(all, noise_.scale(), rng, phase);
  if (phase == Phase::Train) noise_.step();
  return arm;
}

void Level1Agent::update(const InnerContext& ctx, std::size_t arm, double reward) {
  table_for(ctx).update(arm, reward);
}

nlohmann::json Level1Agent::to_json() const {
  auto tables = nlohmann::json::array();
  for (const auto& [ctx, t] : tables_)
    tables.push_back({{"sharing_ap", ctx.sharing_ap}, {"sharing_sta", ctx.sharing_sta}, {"values", t.to_json()}});
  return {{"n_aps", n_aps_}, {"noise_scale", noise_.scale()}, {"tables", tables}};
}

void Level1Agent::load_json(const nlohmann::json& j) {
  if (j.at("n_aps").get<std::size_t>() != n_aps_) throw ConfigError("checkpoint AP count differs");
  tables_.clear();
  for (const auto& t : j.at("tables")) {
    InnerContext ctx{t.at("sharing_ap").get<std::size_t>(), t.at("sharing_sta").get<std::size_t>()};
    auto table = ValueTable::from_json(t.at("values"));
    if (table.size() != arm_count()) throw ConfigError("checkpoint level-1 table has the wrong size");
    tables_.emplace(ctx, std::move(table));
  }
  noise_.set_scale(j.at("noise_scale").get<double>());
}

// ---------------------------------------------------------------------------
// Level 2

Level2Agent::Level2Agent(const Deployment& deployment, int power_levels, std::vector<int> mcs_set,
                         NoiseSchedule schedule, const McsTable& table)
    : power_levels_(power_levels), mcs_set_(std::move(mcs_set)), noise_(schedule) {
  schedule.validate();
  if (power_levels_ < 1) throw ConfigError("level-2 agent needs at least one power level");
  if (mcs_set_.empty()) mcs_set_ = table.selectable_indices();
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < mcs_set_.size(); ++s) {
    const auto& e = table.at(mcs_set_[s]);
    if (!e.selectable())
      throw UnsupportedMcsError("MCS " + std::to_string(e.index) + " cannot be an action");
    mcs_rate_.push_back(*e.data_rate_mbps);
    if (*e.data_rate_mbps < lowest) {
      lowest = *e.data_rate_mbps;
      fallback_mcs_slot_ = static_cast<int>(s);
    }
  }
  for (std::size_t j = 0; j < deployment.n_aps(); ++j) stas_by_ap_.push_back(deployment.stas_of(j));
}

std::size_t Level2Agent::arm_count(std::size_t ap) const {
  return stas_by_ap_.at(ap).size() * static_cast<std::size_t>(power_levels_) * mcs_set_.size();
}

Level2Arm Level2Agent::decode(std::size_t ap, std::size_t arm) const {
  if (arm >= arm_count(ap)) throw IndexError("level-2 arm out of range");
  const std::size_t n_mcs = mcs_set_.size();
  const std::size_t m = arm % n_mcs;
  const std::size_t z = (arm / n_mcs) % static_cast<std::size_t>(power_levels_);
  const std::size_t s = arm / n_mcs / static_cast<std::size_t>(power_levels_);
  return {stas_by_ap_[ap][s], static_cast<int>(z), mcs_set_[m]};
}

ValueTable& Level2Agent::table_for(const InnerContext& ctx, std::size_t subset, std::size_t ap) {
  const Key key{ctx.sharing_ap, ctx.sharing_sta, subset, ap};
  auto it = tables_.find(key);
  if (it == tables_.end()) it = tables_.emplace(key, ValueTable(arm_count(ap))).first;
  return it->second;
}

ValueTable& Level2Agent::pooled_for(const InnerContext& ctx, std::size_t ap) {
  const PooledKey key{ctx.sharing_ap, ctx.sharing_sta, ap};
  auto it = pooled_.find(key);
  if (it == pooled_.end()) it = pooled_.emplace(key, ValueTable(arm_count(ap))).first;
  return it->second;
}

const ValueTable* Level2Agent::pooled(const InnerContext& ctx, std::size_t ap) const {
  auto it = pooled_.find(PooledKey{ctx.sharing_ap, ctx.sharing_sta, ap});
  return it == pooled_.end() ? nullptr : &it->second;
}

const ValueTable* Level2Agent::table(const InnerContext& ctx, std::size_t subset,
                                     std::size_t ap) const {
  auto it = tables_.find(Key{ctx.sharing_ap, ctx.sharing_sta, subset, ap});
  return it == tables_.end() ? nullptr : &it->second;
}

Level2Agent::Choice Level2Agent::select(const InnerContext& ctx, std::size_t subset, std::size_t ap,
                                        std::optional<std::size_t> fixed_sta, double qos_mask_mbps,
                                        Rng& rng, Phase phase) {
  const auto& stas = stas_by_ap_.at(ap);
  if (stas.empty()) throw SchedulingError("AP " + std::to_string(ap) + " has no associated STA");
  std::size_t s_begin = 0;
  std::size_t s_end = stas.size();
  if (fixed_sta) {
    auto it = std::find(stas.begin(), stas.end(), *fixed_sta);
    if (it == stas.end())
      throw InvalidActionError("STA " + std::to_string(*fixed_sta) + " is not associated with AP " +
                               std::to_string(ap));
    s_begin = static_cast<std::size_t>(it - stas.begin());
    s_end = s_begin + 1;
  }
  const std::size_t n_mcs = mcs_set_.size();
  const auto levels = static_cast<std::size_t>(power_levels_);

  auto collect = [&](auto keep) {
    std::vector<std::size_t> out;
    for (std::size_t s = s_begin; s < s_end; ++s)
      for (std::size_t z = 0; z < levels; ++z)
        for (std::size_t m = 0; m < n_mcs; ++m)
          if (keep(m)) out.push_back((s * levels + z) * n_mcs + m);
    return out;
  };

  Choice choice;
  auto candidates = collect([&](std::size_t m) { return 0.5 * mcs_rate_[m] >= qos_mask_mbps; });
  if (candidates.empty()) {
    choice.mask_fallback = true;
    const auto slot = static_cast<std::size_t>(fallback_mcs_slot_);
    candidates = collect([&](std::size_t m) { return m == slot; });
  }
  choice.arm = table_for(ctx, subset, ap)
                   .select(candidates, noise_.scale(), rng, phase, &pooled_for(ctx, ap));
  choice.decoded = decode(ap, choice.arm);
  if (phase == Phase::Train) noise_.step();
  return choice;
}

void Level2Agent::update(const InnerContext& ctx, std::size_t subset, std::size_t ap,
                         std::size_t arm, double reward) {
  table_for(ctx, subset, ap).update(arm, reward);
  pooled_for(ctx, ap).update(arm, reward);
}

nlohmann::json Level2Agent::to_json() const {
  auto tables = nlohmann::json::array();
  for (const auto& [key, t] : tables_) {
    const auto& [x, y, subset, ap] = key;
    tables.push_back({{"sharing_ap", x},
                      {"sharing_sta", y},
                      {"subset", subset},
                      {"ap", ap},
                      {"values", t.to_json()}});
  }
  auto pooled = nlohmann::json::array();
  for (const auto& [key, t] : pooled_) {
    const auto& [x, y, ap] = key;
    pooled.push_back({{"sharing_ap", x}, {"sharing_sta", y}, {"ap", ap}, {"values", t.to_json()}});
  }
  return {{"power_levels", power_levels_},
          {"mcs_set", mcs_set_},
          {"noise_scale", noise_.scale()},
          {"tables", tables},
          {"pooled_tables", pooled}};
}

void Level2Agent::load_json(const nlohmann::json& j) {
  if (j.at("power_levels").get<int>() != power_levels_ ||
      j.at("mcs_set").get<std::vector<int>>() != mcs_set_)
    throw ConfigError("checkpoint level-2 arm layout differs from the configuration");
  tables_.clear();
  for (const auto& t : j.at("tables")) {
    Key key{t.at("sharing_ap").get<std::size_t>(), t.at("sharing_sta").get<std::size_t>(),
            t.at("subset").get<std::size_t>(), t.at("ap").get<std::size_t>()};
    auto table = ValueTable::from_json(t.at("values"));
    if (table.size() != arm_count(std::get<3>(key)))
      throw ConfigError("checkpoint level-2 table has the wrong size");
    tables_.emplace(key, std::move(table));
  }
  pooled_.clear();
  for (const auto& t : j.at("pooled_tables")) {
    PooledKey key{t.at("sharing_ap").get<std::size_t>(), t.at("sharing_sta").get<std::size_t>(),
                  t.at("ap").get<std::size_t>()};
    auto table = ValueTable::from_json(t.at("values"));
    if (table.size() != arm_count(std::get<2>(key)))
      throw ConfigError("checkpoint level-2 table has the wrong size");
    pooled_.emplace(key, std::move(table));
  }
  noise_.set_scale(j.at("noise_scale").get<double>());
}

// ---------------------------------------------------------------------------
// Inner layer

InnerDecision inner_select(Level1Agent& l1, Level2Agent& l2, const TxopContext& txop,
                           double current_q, QosScope mask_scope, const Deployment& deployment,
                           Rng& rng, Phase phase) {
  InnerDecision d;
  d.ctx = InnerContext{txop.sharing_ap, txop.sharing_sta};
  d.action.txop_index = txop.txop_index;
  d.action.sharing_ap = txop.sharing_ap;
  d.action.sharing_sta = txop.sharing_sta;
  d.action.per_ap_schedule.assign(deployment.n_aps(), std::nullopt);

  d.level1_arm = l1.select(d.ctx, rng, phase);

  auto place = [&](std::size_t ap, const Level2Agent::Choice& c) {
    d.action.per_ap_schedule[ap] = ApAssignment{c.decoded.sta, c.decoded.power_level, c.decoded.mcs};
    d.level2_arms.emplace_back(ap, c.arm);
    if (c.mask_fallback) ++d.mask_fallbacks;
  };

  place(txop.sharing_ap,
        l2.select(d.ctx, d.level1_arm, txop.sharing_ap, txop.sharing_sta, current_q, rng, phase));
  const double shared_mask = mask_scope == QosScope::AllLinks ? current_q : 0.0;
  for (std::size_t ap : l1.subset_aps(txop.sharing_ap, d.level1_arm))
    place(ap, l2.select(d.ctx, d.level1_arm, ap, std::nullopt, shared_mask, rng, phase));
  return d;
}

void inner_update(Level1Agent& l1, Level2Agent& l2, const InnerDecision& decision,
                  double per_txop_reward, Phase phase) {
  if (phase == Phase::Eval) return;
  l1.update(decision.ctx, decision.level1_arm, per_txop_reward);
  for (const auto& [ap, arm] : decision.level2_arms) l2.update(decision.ctx, decision.level1_arm, ap, arm, per_txop_reward);
}

double penalized_sum_rate(const TxopOutcome& outcome, double q_mbps) {
  return outcome.sum_rate_mbps - q_mbps * static_cast<double>(outcome.qos_violations.size());
}

int greedy_mcs(double sinr, const McsTable& table) {
  int best = 15;
  double best_mean = -std::numeric_limits<double>::infinity();
  double best_rate = 0.0;
  for (const auto& e : table.entries()) {
    if (!e.selectable() || !e.mean_sinr_db || *e.mean_sinr_db > sinr) continue;
    const double mean = *e.mean_sinr_db;
    if (mean > best_mean || (mean == best_mean && *e.data_rate_mbps > best_rate)) {
      best = e.index;
      best_mean = mean;
      best_rate = *e.data_rate_mbps;
    }
  }
  return best;
}

}  // namespace mapc
