#include "mapc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"

namespace mapc {

void ChannelParams::validate() const {
  if (!(carrier_freq_ghz > 0.0)) throw ConfigError("carrier_freq_ghz must be > 0");
  if (!(breakpoint_m > 0.0)) throw ConfigError("breakpoint_m must be > 0");
  if (!(mcs_sigma_db > 0.0)) throw ConfigError("mcs_sigma_db must be > 0");
  if (!std::isfinite(noise_power_dbm)) throw ConfigError("noise_power_dbm must be finite");
  if (!std::isfinite(detect_threshold_db)) throw ConfigError("detect_threshold_db must be finite");
}

// ---------------------------------------------------------------------------
// MCS table

namespace {

McsEntry entry(int index, const char* modulation, int num, int den,
               std::optional<double> rate, std::optional<double> sinr) {
  return McsEntry{index, modulation, Rational{num, den}, rate, sinr};
}

Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) throw ConfigError("coding_rate must look like 'n/d': " + s);
  try {
    Rational r{std::stoi(s.substr(0, slash)), std::stoi(s.substr(slash + 1))};
    if (r.num <= 0 || r.den <= 0) throw ConfigError("coding_rate must be positive: " + s);
    return r;
  } catch (const std::logic_error&) {
    throw ConfigError("coding_rate must look like 'n/d': " + s);
  }
}

}  // namespace

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.size() != 16) throw ConfigError("MCS table must have exactly 16 entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].index != static_cast<int>(i))
      throw ConfigError("MCS table entries must be ordered by index 0..15");
  }
  for (int i = 0; i <= 13; ++i) {
    const auto& e = entries_[i];
    if (!e.data_rate_mbps || !e.mean_sinr_db)
      throw ConfigError("MCS " + std::to_string(i) + " needs a rate and a mean SINR");
    if (i > 0) {
      const auto& prev = entries_[i - 1];
      if (!(*e.data_rate_mbps > *prev.data_rate_mbps))
        throw ConfigError("MCS rates must strictly increase over 0..13");
      if (*e.mean_sinr_db < *prev.mean_sinr_db)
        throw ConfigError("MCS mean SINR must not decrease over 0..13");
    }
  }
  if (entries_[14].data_rate_mbps) throw ConfigError("MCS 14 must have no rate");
  if (!entries_[15].data_rate_mbps || *entries_[15].data_rate_mbps != 4.0 ||
      !entries_[15].mean_sinr_db)
    throw ConfigError("MCS 15 must have rate 4 Mb/s and a mean SINR");
}

const McsTable& McsTable::standard() {
  static const McsTable table({
      entry(0, "BPSK", 1, 2, 9, 10.61),
      entry(1, "QPSK", 1, 2, 17, 10.65),
      entry(2, "QPSK", 3, 4, 26, 10.66),
      entry(3, "16-QAM", 1, 2, 34, 10.68),
      entry(4, "16-QAM", 3, 4, 52, 11.15),
      entry(5, "64-QAM", 2, 3, 69, 15.41),
      entry(6, "64-QAM", 3, 4, 77, 16.73),
      entry(7, "64-QAM", 5, 6, 86, 18.09),
      entry(8, "256-QAM", 3, 4, 103, 21.80),
      entry(9, "256-QAM", 5, 6, 115, 23.33),
      entry(10, "1024-QAM", 3, 4, 129, 29.78),
      entry(11, "1024-QAM", 5, 6, 143, 31.75),
      entry(12, "4096-QAM", 3, 4, 155, 33.74),
      entry(13, "4096-QAM", 3, 4, 172, 35.56),
      entry(14, "BPSK-DCM-DUP", 1, 2, std::nullopt, std::nullopt),
      entry(15, "BPSK-DCM", 1, 2, 4, 10.61),
  });
  return table;
}

McsTable McsTable::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("MCS table JSON must be an array");
  std::vector<McsEntry> entries;
  for (const auto& row : j) {
    McsEntry e;
    e.index = row.at("index").get<int>();
    e.modulation = row.at("modulation").get<std::string>();
    e.coding_rate = parse_rational(row.at("coding_rate").get<std::string>());
    if (row.contains("rate_mbps") && !row.at("rate_mbps").is_null())
      e.data_rate_mbps = row.at("rate_mbps").get<double>();
    if (row.contains("mean_sinr_db") && !row.at("mean_sinr_db").is_null())
      e.mean_sinr_db = row.at("mean_sinr_db").get<double>();
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const McsEntry& a, const McsEntry& b) { return a.index < b.index; });
  return McsTable(std::move(entries));
}

McsTable McsTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open MCS table: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("MCS table " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json McsTable::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json row;
    row["index"] = e.index;
    row["modulation"] = e.modulation;
    row["coding_rate"] = std::to_string(e.coding_rate.num) + "/" + std::to_string(e.coding_rate.den);
    row["rate_mbps"] = e.data_rate_mbps ? nlohmann::json(*e.data_rate_mbps) : nlohmann::json();
    row["mean_sinr_db"] = e.mean_sinr_db ? nlohmann::json(*e.mean_sinr_db) : nlohmann::json();
    out.push_back(std::move(row));
  }
  return out;
}

const McsEntry& McsTable::at(int index) const {
  if (index < 0 || index >= static_cast<int>(entries_.size()))
    throw IndexError("MCS index out of range: " + std::to_string(index));
  return entries_[static_cast<std::size_t>(index)];
}

std::vector<int> McsTable::selectable_indices() const {
  std::vector<int> out;
  for (const auto& e : entries_)
    if (e.selectable()) out.push_back(e.index);
  return out;
}

double McsTable::max_rate_mbps() const {
  double best = 0.0;
  for (const auto& e : entries_)
    if (e.data_rate_mbps) best = std::max(best, *e.data_rate_mbps);
  return best;
}

// ---------------------------------------------------------------------------
// Power grid

void PowerGrid::validate() const {
  if (num_levels < 1) throw ConfigError("power grid needs at least one level");
  if (!(p_min_dbm < p_max_dbm)) throw ConfigError("power grid requires p_min_dbm < p_max_dbm");
}

double PowerGrid::level_dbm(int z) const { return power_level_dbm(z, *this); }

double power_level_dbm(int z, const PowerGrid& grid) {
  if (z < 0 || z >= grid.num_levels)
    throw IndexError("power level " + std::to_string(z) + " outside [0, " +
                     std::to_string(grid.num_levels) + ")");
  return (grid.p_max_dbm - grid.p_min_dbm) / grid.num_levels * z + grid.p_min_dbm;
}

// ---------------------------------------------------------------------------
// Link physics

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double path_loss_db(double distance_m, const ChannelParams& params) {
  if (!(distance_m > 0.0) || !std::isfinite(distance_m))
    throw DomainError("path loss needs a positive finite distance");
  const double near = std::min(distance_m, params.breakpoint_m);
  double loss = 40.05 + 20.0 * std::log10(near * params.carrier_freq_ghz / 2.4);
  if (distance_m >= params.breakpoint_m) loss += 35.0 * std::log10(distance_m / params.breakpoint_m);
  return loss;
}

double success_probability(double sinr_db, const McsEntry& mcs, double sigma_db) {
  if (!mcs.mean_sinr_db || !mcs.selectable())
    throw UnsupportedMcsError("MCS " + std::to_string(mcs.index) + " has no decoding threshold");
  if (!(sigma_db > 0.0)) throw DomainError("decoding threshold std-dev must be > 0");
  return normal_cdf((sinr_db - *mcs.mean_sinr_db) / sigma_db);
}

double sinr_db(double rx_signal_dbm, std::span<const double> rx_interference_mw,
               double noise_power_dbm) {
  double denom = dbm_to_mw(noise_power_dbm);
  for (double i : rx_interference_mw) denom += i;
  return mw_to_dbm(dbm_to_mw(rx_signal_dbm) / denom);
}

double effective_link_rate(const McsEntry& mcs, double sinr, const ChannelParams& params) {
  if (!mcs.selectable())
    throw UnsupportedMcsError("MCS " + std::to_string(mcs.index) + " has no nominal rate");
  if (sinr < params.detect_threshold_db) return 0.0;
  return *mcs.data_rate_mbps * success_probability(sinr, mcs, params.mcs_sigma_db);
}

double frames_per_txop(double link_rate_mbps, double tau_s, double frame_bits) {
  if (!(tau_s > 0.0) || !(frame_bits > 0.0))
    throw DomainError("TXOP duration and frame size must be positive");
  return link_rate_mbps * 1e6 * tau_s / frame_bits;
}

double rate_from_frames(double frames, double tau_s, double frame_bits) {
  if (!(tau_s > 0.0) || !(frame_bits > 0.0))
    throw DomainError("TXOP duration and frame size must be positive");
  return frame_bits * frames / tau_s / 1e6;
}

std::int64_t sample_delivered_frames(const McsEntry& mcs, double sinr,
                                     const ChannelParams& params, double tau_s,
                                     double frame_bits, std::mt19937_64& rng) {
  if (!mcs.selectable())
    throw UnsupportedMcsError("MCS " + std::to_string(mcs.index) + " has no nominal rate");
  if (sinr < params.detect_threshold_db) return 0;
  const auto attempts =
      static_cast<std::int64_t>(std::floor(frames_per_txop(*mcs.data_rate_mbps, tau_s, frame_bits)));
  if (attempts <= 0) return 0;
  std::binomial_distribution<std::int64_t> delivered(
      attempts, success_probability(sinr, mcs, params.mcs_sigma_db));
  return delivered(rng);
}

}  // namespace mapc
