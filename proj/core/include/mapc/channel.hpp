#pragma once

// Per-link physics for a single 20 MHz channel: TGac NLOS path loss, the
// discrete transmit-power grid, the MCS table, SINR, Gaussian decoding
// model and the resulting expected link rate.
//
// Everything here is a pure function of its inputs.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mapc {

struct ChannelParams {
  double carrier_freq_ghz = 2.4;
  double breakpoint_m = 3.0;
  double noise_power_dbm = -94.0;
  double mcs_sigma_db = 1.4142135623730951;  // sqrt(sigma_m^2 = 2)
  double detect_threshold_db = 0.0;          // gamma

  void validate() const;
};

struct Rational {
  int num = 1;
  int den = 1;

  double value() const { return static_cast<double>(num) / den; }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct McsEntry {
  int index = 0;
  std::string modulation;
  Rational coding_rate;
  std::optional<double> data_rate_mbps;  // absent: not selectable
  std::optional<double> mean_sinr_db;

  bool selectable() const { return data_rate_mbps.has_value(); }
};

// The 16-entry 20 MHz MCS table. The constructor enforces the ordering
// invariants so a table loaded from JSON cannot silently reorder rates.
class McsTable {
 public:
  explicit McsTable(std::vector<McsEntry> entries);

  static const McsTable& standard();
  static McsTable from_json(const nlohmann::json& j);
  static McsTable load(const std::string& path);
  nlohmann::json to_json() const;

  const McsEntry& at(int index) const;
  std::span<const McsEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Indices usable in an action, in ascending index order (14 excluded).
  std::vector<int> selectable_indices() const;
  double max_rate_mbps() const;

 private:
  std::vector<McsEntry> entries_;
};

struct PowerGrid {
  int num_levels = 8;  // d_t
  double p_min_dbm = 10.0;
  double p_max_dbm = 20.0;

  void validate() const;
  double level_dbm(int z) const;
  int max_level() const { return num_levels - 1; }
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

// Standard normal CDF via erfc; absolute error well below 1e-7.
double normal_cdf(double x);

double path_loss_db(double distance_m, const ChannelParams& params);

double power_level_dbm(int z, const PowerGrid& grid);

double success_probability(double sinr_db, const McsEntry& mcs, double sigma_db);

double sinr_db(double rx_signal_dbm, std::span<const double> rx_interference_mw,
               double noise_power_dbm);

// Expected rate R(m) * 1[sinr >= gamma] * P_success, in Mb/s.
double effective_link_rate(const McsEntry& mcs, double sinr_db, const ChannelParams& params);

double frames_per_txop(double link_rate_mbps, double tau_s, double frame_bits);
double rate_from_frames(double frames, double tau_s, double frame_bits);

// Stochastic variant: floor(R*tau/L) frames, each delivered with P_success.
std::int64_t sample_delivered_frames(const McsEntry& mcs, double sinr_db,
                                     const ChannelParams& params, double tau_s,
                                     double frame_bits, std::mt19937_64& rng);

}  // namespace mapc
