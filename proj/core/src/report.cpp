#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "mapc/experiment.hpp"

namespace mapc {

namespace {

// Round once so the text table and the JSON carry the same decimal number.
double rounded(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::strtod(buf, nullptr);
}

std::string cell(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

nlohmann::json json_or_null(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Row {
  std::string label;
  std::string seed;
  std::optional<double> jain;
  std::optional<double> mean_rate;
  std::optional<double> tail_rate;
  std::optional<double> conv;
  std::optional<double> violations;
  std::optional<double> resamples;
  std::optional<double> fallbacks;
};

Row row_for(const RunSummary& s) {
  Row r;
  r.label = s.algorithm;
  r.seed = std::to_string(s.seed);
  if (s.final_jain) r.jain = rounded(*s.final_jain);
  r.mean_rate = rounded(s.mean_sum_rate_mbps);
  r.tail_rate = rounded(s.tail_mean_sum_rate_mbps);
  if (s.convergence_txop) r.conv = static_cast<double>(*s.convergence_txop);
  r.violations = rounded(s.qos_violation_rate);
  r.resamples = s.topology_resamples;
  r.fallbacks = static_cast<double>(s.mask_fallbacks);
  return r;
}

nlohmann::json row_json(const Row& r) {
  return {{"algorithm", r.label},
          {"seed", r.seed},
          {"final_jain", json_or_null(r.jain)},
          {"mean_sum_rate_mbps", json_or_null(r.mean_rate)},
          {"tail_mean_sum_rate_mbps", json_or_null(r.tail_rate)},
          {"convergence_txop", json_or_null(r.conv)},
          {"qos_violation_rate", json_or_null(r.violations)},
          {"topology_resamples", json_or_null(r.resamples)},
          {"mask_fallbacks", json_or_null(r.fallbacks)}};
}

std::string count_cell(std::optional<double> v) {
  if (!v) return "-";
  return std::to_string(static_cast<long long>(std::llround(*v)));
}

}  // namespace

Report emit_report(const std::vector<RunSummary>& summaries, const std::vector<std::string>& notes) {
  std::vector<Row> rows;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> by_algo;
  for (const auto& s : summaries) {
    rows.push_back(row_for(s));
    if (!by_algo.count(s.algorithm)) order.push_back(s.algorithm);
    by_algo[s.algorithm].push_back(&s);
  }

  std::vector<Row> medians;
  const bool multi_seed = std::any_of(by_algo.begin(), by_algo.end(),
                                      [](const auto& kv) { return kv.second.size() > 1; });
  if (multi_seed) {
    for (const auto& algo : order) {
      std::vector<double> jain, rate, tail, conv, viol;
      for (const auto* s : by_algo[algo]) {
        if (s->final_jain) jain.push_back(*s->final_jain);
        rate.push_back(s->mean_sum_rate_mbps);
        tail.push_back(s->tail_mean_sum_rate_mbps);
        if (s->convergence_txop) conv.push_back(static_cast<double>(*s->convergence_txop));
        viol.push_back(s->qos_violation_rate);
      }
      Row m;
      m.label = algo;
      m.seed = "median";
      auto r = [](std::optional<double> v) { return v ? std::optional<double>(rounded(*v)) : std::nullopt; };
      m.jain = r(median(jain));
      m.mean_rate = r(median(rate));
      m.tail_rate = r(median(tail));
      m.conv = r(median(conv));
      m.violations = r(median(viol));
      medians.push_back(m);
    }
  }

  std::ostringstream text;
  char line[256];
  const char* fmt = "%-18s %8s %10s %14s %14s %10s %10s %9s %9s\n";
  std::snprintf(line, sizeof line, fmt, "algorithm", "seed", "jain", "mean_rate", "tail_rate",
                "conv_txop", "qos_viol", "resample", "fallback");
  text << line;
  auto emit = [&](const Row& r) {
    std::snprintf(line, sizeof line, fmt, r.label.c_str(), r.seed.c_str(), cell(r.jain).c_str(),
                  cell(r.mean_rate).c_str(), cell(r.tail_rate).c_str(), count_cell(r.conv).c_str(),
                  cell(r.violations).c_str(), count_cell(r.resamples).c_str(),
                  count_cell(r.fallbacks).c_str());
    text << line;
  };
  for (const auto& r : rows) emit(r);
  if (!medians.empty()) {
    text << '\n';
    for (const auto& r : medians) emit(r);
  }
  for (const auto& n : notes) text << "note: " << n << '\n';

  Report report;
  report.text = text.str();
  report.json["runs"] = nlohmann::json::array();
  for (const auto& r : rows) report.json["runs"].push_back(row_json(r));
  report.json["medians"] = nlohmann::json::array();
  for (const auto& r : medians) report.json["medians"].push_back(row_json(r));
  report.json["notes"] = notes;
  return report;
}

Report emit_report(const ComparisonResult& result) {
  std::vector<RunSummary> all;
  std::vector<std::string> notes;
  for (const auto& seed : result.seeds) {
    for (const auto& [_, s] : seed.summaries) all.push_back(s);
    for (const auto& [algo, err] : seed.errors)
      notes.push_back("seed " + std::to_string(seed.seed) + " " + algo + " aborted: " + err);
  }
  std::stable_sort(all.begin(), all.end(), [](const RunSummary& a, const RunSummary& b) {
    auto rank = [](const std::string& n) {
      return std::find(kAllAlgorithms.begin(), kAllAlgorithms.end(), n) - kAllAlgorithms.begin();
    };
    if (rank(a.algorithm) != rank(b.algorithm)) return rank(a.algorithm) < rank(b.algorithm);
    return a.seed < b.seed;
  });
  return emit_report(all, notes);
}

}  // namespace mapc
