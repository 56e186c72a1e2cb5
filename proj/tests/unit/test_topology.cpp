#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "mapc/errors.hpp"
#include "mapc/rng.hpp"
#include "mapc/topology.hpp"

using namespace mapc;

TEST_SUITE("topology") {

TEST_CASE("ap grid positions") {
  const auto aps = place_aps(Room{}, 6, ApGrid{3, 2});
  REQUIRE(aps.size() == 6);
  const double xs[] = {125.0 / 6, 62.5, 125.0 * 5 / 6};
  const double ys[] = {18.75, 56.25};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) {
      CHECK(aps[r * 3 + c].x == doctest::Approx(xs[c]));
      CHECK(aps[r * 3 + c].y == doctest::Approx(ys[r]));
    }
  CHECK(aps[0].x == doctest::Approx(20.833).epsilon(1e-4));
  CHECK(aps[2].x == doctest::Approx(104.167).epsilon(1e-4));

  const auto one = place_aps(Room{100, 100}, 1, ApGrid{1, 1});
  CHECK(one[0] == Point{50, 50});
  CHECK_THROWS_AS(place_aps(Room{}, 5, ApGrid{3, 2}), ConfigError);
}

TEST_CASE("grid spacing is uniform along each axis") {
  const auto aps = place_aps(Room{}, 6, ApGrid{3, 2});
  CHECK(distance(aps[0], aps[1]) == doctest::Approx(distance(aps[1], aps[2])));
  CHECK(distance(aps[3], aps[4]) == doctest::Approx(distance(aps[0], aps[1])));
  CHECK(distance(aps[0], aps[3]) == doctest::Approx(distance(aps[2], aps[5])));
}

TEST_CASE("ppp mean count matches lambda times area") {
  const Room room;
  const double lambda = 0.002;
  CHECK(lambda * room.area() == doctest::Approx(18.75));
  const int reps = 10000;
  double sum = 0.0;
  for (int s = 0; s < reps; ++s) {
    Rng rng(SeedStreams(static_cast<std::uint64_t>(s)).seed_for("ppp"));
    sum += static_cast<double>(sample_stas(room, lambda, rng).size());
  }
  const double mean = sum / reps;
  CHECK(std::abs(mean - 18.75) / 18.75 < 0.01);
  const double se = std::sqrt(18.75 / reps);
  CHECK(std::abs(mean - 18.75) < 3 * se);
}

TEST_CASE("ppp points stay in the room and vanishing intensity gives no points") {
  Rng rng(11);
  const Room room;
  for (int i = 0; i < 50; ++i)
    for (const auto& p : sample_stas(room, 0.01, rng)) CHECK(room.contains(p));
  int empty = 0;
  for (int i = 0; i < 200; ++i) empty += sample_stas(room, 1e-9, rng).empty();
  CHECK(empty == 200);
  CHECK_THROWS_AS(sample_stas(room, 0.0, rng), DomainError);
}

TEST_CASE("nearest association") {
  const auto aps = place_aps(Room{}, 6, ApGrid{3, 2});
  CHECK(associate_nearest(aps, std::vector<Point>{aps[2]})[0] == 2);
  // Midpoint between AP0 and AP1: tie goes to the lower index.
  const Point mid{(aps[0].x + aps[1].x) / 2, aps[0].y};
  CHECK(associate_nearest(aps, std::vector<Point>{mid})[0] == 0);

  Rng rng(5);
  const auto stas = sample_stas(Room{}, 0.01, rng);
  const auto assoc = associate_nearest(aps, stas);
  for (std::size_t i = 0; i < stas.size(); ++i) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < aps.size(); ++j) {
      const double d = std::hypot(aps[j].x - stas[i].x, aps[j].y - stas[i].y);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    CHECK(assoc[i] == best);
  }
}

TEST_CASE("gain matrix") {
  ChannelParams ch;
  const std::vector<Point> aps{{10, 10}};
  const std::vector<Point> stas{{13, 10}, {10, 13}, {10, 10}};
  const auto g = build_gain_matrix(aps, stas, ch);
  CHECK(g.loss_db(0, 0) == doctest::Approx(40.05 + 20 * std::log10(3.0)));
  CHECK(g.loss_db(0, 0) == g.loss_db(0, 1));
  // Coincident STA uses the minimum link distance.
  CHECK(g.loss_db(0, 2) == doctest::Approx(40.05 + 20 * std::log10(0.1)));

  Rng rng(9);
  const auto aps6 = place_aps(Room{}, 6, ApGrid{3, 2});
  const auto many = sample_stas(Room{}, 0.005, rng);
  const auto full = build_gain_matrix(aps6, many, ch);
  const double floor_db = 40.05 + 20.0 * std::log10(0.1 * ch.carrier_freq_ghz / 2.4);
  for (std::size_t j = 0; j < aps6.size(); ++j)
    for (std::size_t i = 0; i < many.size(); ++i) {
      const double d = std::max(std::hypot(aps6[j].x - many[i].x, aps6[j].y - many[i].y), 0.1);
      const double pl = d < 3.0 ? 40.05 + 20 * std::log10(d) : 40.05 + 20 * std::log10(3.0) + 35 * std::log10(d / 3.0);
      CHECK(full.loss_db(j, i) == doctest::Approx(pl));
      CHECK(full.loss_db(j, i) >= floor_db);
    }
}

TEST_CASE("generated deployments") {
  TopologyConfig cfg;
  ChannelParams ch;
  const auto a = generate_deployment(cfg, ch, 1234);
  const auto b = generate_deployment(cfg, ch, 1234);
  CHECK(deployment_hash(a) == deployment_hash(b));
  CHECK(a.sta_positions == b.sta_positions);
  CHECK(a.n_aps() == 6);
  for (std::size_t ap = 0; ap < a.n_aps(); ++ap) CHECK_FALSE(a.stas_of(ap).empty());
  for (std::size_t i = 0; i < a.n_stas(); ++i) CHECK(a.association[i] < a.n_aps());
  CHECK(a.coverage_fraction() >= 0.0);
  CHECK(a.coverage_fraction() <= 1.0);
  const auto c = generate_deployment(cfg, ch, 1235);
  CHECK(deployment_hash(a) != deployment_hash(c));
}

TEST_CASE("resampling gives up after the retry bound") {
  TopologyConfig cfg;
  cfg.sta_density = 1e-7;  // almost surely empty
  CHECK_THROWS_AS(generate_deployment(cfg, ChannelParams{}, 1), SchedulingError);
}

TEST_CASE("topology config validation") {
  TopologyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_aps = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.room.width_m = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.sta_density = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("deployment json round trip") {
  ChannelParams ch;
  const auto d = generate_deployment(TopologyConfig{}, ch, 77);
  const auto j = deployment_to_json(d);
  const auto back = deployment_from_json(nlohmann::json::parse(j.dump()), ch);
  CHECK(deployment_hash(back) == deployment_hash(d));
  CHECK(back.association == d.association);
  for (std::size_t a = 0; a < d.n_aps(); ++a)
    for (std::size_t s = 0; s < d.n_stas(); ++s) CHECK(back.gain_db.loss_db(a, s) == d.gain_db.loss_db(a, s));

  auto bad = j;
  bad["association"][0] = (d.association[0] + 1) % d.n_aps();
  CHECK_THROWS_AS(deployment_from_json(bad, ch), ConfigError);
}

}

TEST_SUITE("rng") {

TEST_CASE("named streams are stable and distinct") {
  SeedStreams s(42);
  CHECK(s.seed_for("topology") == SeedStreams(42).seed_for("topology"));
  std::set<std::uint64_t> seen;
  for (const char* n : {"topology", "sta_schedule", "policy/baseline", "policy/hier_weighted", "frames/baseline"})
    seen.insert(s.seed_for(n));
  CHECK(seen.size() == 5);
  CHECK(SeedStreams(43).seed_for("topology") != s.seed_for("topology"));
}

TEST_CASE("fnv1a and splitmix reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

}
