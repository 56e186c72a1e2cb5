#include "mapc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"

namespace mapc {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Room::contains(Point p) const {
  return p.x >= 0.0 && p.x <= width_m && p.y >= 0.0 && p.y <= height_m;
}

void Room::validate() const {
  if (!(width_m > 0.0) || !(height_m > 0.0)) throw ConfigError("room dimensions must be positive");
}

void TopologyConfig::validate() const {
  room.validate();
  if (n_aps == 0) throw ConfigError("need at least one AP");
  if (grid.columns < 1 || grid.rows < 1) throw ConfigError("AP grid dimensions must be >= 1");
  if (static_cast<std::size_t>(grid.columns) * static_cast<std::size_t>(grid.rows) != n_aps)
    throw ConfigError("AP grid " + std::to_string(grid.columns) + "x" + std::to_string(grid.rows) +
                      " does not hold " + std::to_string(n_aps) + " APs");
  if (!(sta_density > 0.0)) throw ConfigError("sta_density must be > 0");
  if (!(coverage_radius_m > 0.0)) throw ConfigError("coverage_radius_m must be > 0");
}

std::vector<std::size_t> Deployment::stas_of(std::size_t ap) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < association.size(); ++i)
    if (association[i] == ap) out.push_back(i);
  return out;
}

double Deployment::coverage_fraction() const {
  if (sta_positions.empty()) return 1.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < sta_positions.size(); ++i)
    if (distance(sta_positions[i], ap_positions[association[i]]) <= coverage_radius_m) ++inside;
  return static_cast<double>(inside) / static_cast<double>(sta_positions.size());
}

std::vector<Point> place_aps(const Room& room, std::size_t n_aps, ApGrid grid) {
  room.validate();
  if (grid.columns < 1 || grid.rows < 1 ||
      static_cast<std::size_t>(grid.columns) * static_cast<std::size_t>(grid.rows) != n_aps)
    throw ConfigError("cannot lay out " + std::to_string(n_aps) + " APs on a " +
                      std::to_string(grid.columns) + "x" + std::to_string(grid.rows) + " grid");
  std::vector<Point> out;
  out.reserve(n_aps);
  // Row-major from the bottom-left corner: AP index = row * columns + column.
  for (int b = 0; b < grid.rows; ++b) {
    for (int a = 0; a < grid.columns; ++a) {
      out.push_back({room.width_m * (2 * a + 1) / (2.0 * grid.columns),
                     room.height_m * (2 * b + 1) / (2.0 * grid.rows)});
    }
  }
  return out;
}

std::vector<Point> sample_stas(const Room& room, double intensity, Rng& rng) {
  if (!(intensity > 0.0)) throw DomainError("PPP intensity must be > 0");
  std::poisson_distribution<std::size_t> count(intensity * room.area());
  const std::size_t m = count(rng);
  std::uniform_real_distribution<double> ux(0.0, room.width_m);
  std::uniform_real_distribution<double> uy(0.0, room.height_m);
  std::vector<Point> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    out.push_back({x, y});
  }
  return out;
}

std::vector<std::size_t> associate_nearest(std::span<const Point> aps, std::span<const Point> stas) {
  if (aps.empty()) throw ConfigError("association needs at least one AP");
  std::vector<std::size_t> out(stas.size(), 0);
  for (std::size_t i = 0; i < stas.size(); ++i) {
    double best = distance(aps[0], stas[i]);
    for (std::size_t j = 1; j < aps.size(); ++j) {
      const double d = distance(aps[j], stas[i]);
      if (d < best) {
        best = d;
        out[i] = j;
      }
    }
  }
  return out;
}

GainMatrix build_gain_matrix(std::span<const Point> aps, std::span<const Point> stas,
                             const ChannelParams& channel) {
  GainMatrix g(aps.size(), stas.size());
  for (std::size_t j = 0; j < aps.size(); ++j)
    for (std::size_t i = 0; i < stas.size(); ++i)
      g.loss_db(j, i) = path_loss_db(std::max(distance(aps[j], stas[i]), kMinLinkDistanceM), channel);
  return g;
}

Deployment make_deployment(const Room& room, std::vector<Point> aps, std::vector<Point> stas,
                           const ChannelParams& channel, double coverage_radius_m) {
  Deployment d;
  d.room = room;
  d.coverage_radius_m = coverage_radius_m;
  d.ap_positions = std::move(aps);
  d.sta_positions = std::move(stas);
  d.association = associate_nearest(d.ap_positions, d.sta_positions);
  d.gain_db = build_gain_matrix(d.ap_positions, d.sta_positions, channel);
  return d;
}

Deployment generate_deployment(const TopologyConfig& config, const ChannelParams& channel,
                               std::uint64_t seed) {
  config.validate();
  channel.validate();
  Rng rng(seed);
  auto aps = place_aps(config.room, config.n_aps, config.grid);
  for (int attempt = 0; attempt <= kMaxTopologyResamples; ++attempt) {
    auto stas = sample_stas(config.room, config.sta_density, rng);
    auto assoc = associate_nearest(aps, stas);
    std::vector<bool> served(aps.size(), false);
    for (auto a : assoc) served[a] = true;
    if (std::all_of(served.begin(), served.end(), [](bool b) { return b; })) {
      Deployment d = make_deployment(config.room, aps, std::move(stas), channel,
                                     config.coverage_radius_m);
      d.seed = seed;
      d.resample_count = attempt;
      return d;
    }
  }
  throw SchedulingError("no deployment with every AP serving a STA after " +
                        std::to_string(kMaxTopologyResamples) + " resamples");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json points_to_json(const std::vector<Point>& pts) {
  auto out = nlohmann::json::array();
  for (const auto& p : pts) out.push_back({p.x, p.y});
  return out;
}

std::vector<Point> points_from_json(const nlohmann::json& j) {
  std::vector<Point> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

}  // namespace

nlohmann::json deployment_to_json(const Deployment& d) {
  nlohmann::json j;
  j["room"] = {{"width_m", d.room.width_m}, {"height_m", d.room.height_m}};
  j["coverage_radius_m"] = d.coverage_radius_m;
  j["seed"] = d.seed;
  j["resample_count"] = d.resample_count;
  j["ap_positions"] = points_to_json(d.ap_positions);
  j["sta_positions"] = points_to_json(d.sta_positions);
  j["association"] = d.association;
  return j;
}

Deployment deployment_from_json(const nlohmann::json& j, const ChannelParams& channel) {
  Room room{j.at("room").at("width_m").get<double>(), j.at("room").at("height_m").get<double>()};
  Deployment d = make_deployment(room, points_from_json(j.at("ap_positions")),
                                 points_from_json(j.at("sta_positions")), channel,
                                 j.value("coverage_radius_m", 45.0));
  d.seed = j.value("seed", std::uint64_t{0});
  d.resample_count = j.value("resample_count", 0);
  if (j.contains("association")) {
    auto stored = j.at("association").get<std::vector<std::size_t>>();
    if (stored != d.association)
      throw ConfigError("stored association disagrees with nearest-AP association of positions");
  }
  return d;
}

std::string deployment_hash(const Deployment& d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(deployment_to_json(d).dump())));
  return buf;
}

}  // namespace mapc
