#pragma once

// Indoor deployment: APs on an evenly spaced grid, stations drawn from a
// homogeneous PPP over the whole room, nearest-AP association and the static
// AP x STA path-loss matrix.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mapc/channel.hpp"
#include "mapc/rng.hpp"

namespace mapc {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

struct Room {
  double width_m = 125.0;
  double height_m = 75.0;

  double area() const { return width_m * height_m; }
  bool contains(Point p) const;
  void validate() const;
};

struct ApGrid {
  int columns = 3;
  int rows = 2;
};

inline constexpr double kMinLinkDistanceM = 0.1;
inline constexpr int kMaxTopologyResamples = 100;

// Dense row-major AP x STA matrix of path losses in dB.
class GainMatrix {
 public:
  GainMatrix() = default;
  GainMatrix(std::size_t n_aps, std::size_t n_stas)
      : n_aps_(n_aps), n_stas_(n_stas), loss_db_(n_aps * n_stas, 0.0) {}

  std::size_t n_aps() const { return n_aps_; }
  std::size_t n_stas() const { return n_stas_; }
  double loss_db(std::size_t ap, std::size_t sta) const { return loss_db_[ap * n_stas_ + sta]; }
  double& loss_db(std::size_t ap, std::size_t sta) { return loss_db_[ap * n_stas_ + sta]; }
  std::span<const double> row(std::size_t ap) const {
    return std::span<const double>(loss_db_).subspan(ap * n_stas_, n_stas_);
  }

 private:
  std::size_t n_aps_ = 0;
  std::size_t n_stas_ = 0;
  std::vector<double> loss_db_;
};

struct Deployment {
  Room room;
  std::vector<Point> ap_positions;
  std::vector<Point> sta_positions;
  double coverage_radius_m = 45.0;
  std::vector<std::size_t> association;  // STA -> AP
  GainMatrix gain_db;
  std::uint64_t seed = 0;
  int resample_count = 0;

  std::size_t n_aps() const { return ap_positions.size(); }
  std::size_t n_stas() const { return sta_positions.size(); }

  // STAs associated with `ap`, ascending.
  std::vector<std::size_t> stas_of(std::size_t ap) const;

  // Fraction of STAs within coverage_radius_m of their serving AP.
  double coverage_fraction() const;
};

std::vector<Point> place_aps(const Room& room, std::size_t n_aps, ApGrid grid);

std::vector<Point> sample_stas(const Room& room, double intensity, Rng& rng);

std::vector<std::size_t> associate_nearest(std::span<const Point> aps, std::span<const Point> stas);

GainMatrix build_gain_matrix(std::span<const Point> aps, std::span<const Point> stas,
                             const ChannelParams& channel);

struct TopologyConfig {
  Room room;
  ApGrid grid;
  std::size_t n_aps = 6;
  double sta_density = 0.002;  // lambda, STAs per m^2
  double coverage_radius_m = 45.0;

  void validate() const;
};

// Full deployment with PPP resampling until every AP has at least one STA.
Deployment generate_deployment(const TopologyConfig& config, const ChannelParams& channel,
                               std::uint64_t seed);

// Assembles a deployment from explicit positions (used by tests and loaders).
Deployment make_deployment(const Room& room, std::vector<Point> aps, std::vector<Point> stas,
                           const ChannelParams& channel, double coverage_radius_m = 45.0);

nlohmann::json deployment_to_json(const Deployment& d);
// Gains are recomputed from positions with `channel`; the stored association
// is checked against the positions.
Deployment deployment_from_json(const nlohmann::json& j, const ChannelParams& channel);

// FNV-1a over the canonical JSON dump; used to tag traces.
std::string deployment_hash(const Deployment& d);

}  // namespace mapc
