#include "mapc/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mapc/errors.hpp"

namespace mapc {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(const EpisodeTrace& trace, std::ostream& out) {
  out << "# algorithm=" << trace.algorithm << " deployment_hash=" << trace.deployment_hash
      << " seed=" << trace.seed << " n_aps=" << trace.n_aps
      << " reward=" << to_string(trace.reward_kind) << " t_outer=" << trace.window_txops
      << " topology_resamples=" << trace.topology_resamples
      << " mask_fallbacks=" << trace.mask_fallbacks << '\n';
  out << "txop,sharing_ap,scheduled_sta,active_ap_count,sum_rate_mbps";
  for (std::size_t j = 0; j < trace.n_aps; ++j) out << ",per_ap_rate_" << j;
  out << ",qos_violations,windowed_reward,current_Q\n";
  for (const auto& r : trace.records) {
    out << r.txop << ',' << r.sharing_ap << ',' << r.scheduled_sta << ',' << r.active_ap_count << ','
        << format_real(r.sum_rate_mbps);
    for (double v : r.per_ap_rate) out << ',' << format_real(v);
    out << ',' << r.qos_violations << ',';
    if (r.windowed_reward) out << format_real(*r.windowed_reward);
    out << ',' << format_real(r.current_q) << '\n';
  }
}

void write_trace_csv(const EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace: " + path);
  write_trace_csv(trace, out);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

EpisodeTrace read_trace_csv(std::istream& in) {
  EpisodeTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw Error("trace is missing its '#' metadata line");
  std::map<std::string, std::string> meta;
  for (const auto& kv : split(line.substr(2), ' ')) {
    auto eq = kv.find('=');
    if (eq != std::string::npos) meta[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  try {
    trace.algorithm = meta.at("algorithm");
    trace.deployment_hash = meta.at("deployment_hash");
    trace.seed = std::stoull(meta.at("seed"));
    trace.n_aps = std::stoul(meta.at("n_aps"));
    trace.reward_kind = reward_kind_from_string(meta.at("reward"));
    trace.window_txops = std::stoul(meta.at("t_outer"));
    trace.topology_resamples = std::stoi(meta.at("topology_resamples"));
    trace.mask_fallbacks = std::stoul(meta.at("mask_fallbacks"));
  } catch (const std::out_of_range&) {
    throw Error("trace metadata line is incomplete");
  }

  if (!std::getline(in, line)) throw Error("trace is missing its column header");
  const std::size_t n = trace.n_aps;
  const std::size_t columns = 5 + n + 3;
  if (split(line, ',').size() != columns) throw Error("trace header has the wrong column count");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto f = split(line, ',');
    if (f.size() != columns) throw Error("trace row " + std::to_string(row) + " has the wrong column count");
    TxopRecord r;
    r.txop = std::stoul(f[0]);
    r.sharing_ap = std::stoul(f[1]);
    r.scheduled_sta = std::stoul(f[2]);
    r.active_ap_count = std::stoul(f[3]);
    r.sum_rate_mbps = std::stod(f[4]);
    for (std::size_t j = 0; j < n; ++j) r.per_ap_rate.push_back(std::stod(f[5 + j]));
    r.qos_violations = std::stoul(f[5 + n]);
    if (!f[6 + n].empty()) r.windowed_reward = std::stod(f[6 + n]);
    r.current_q = std::stod(f[7 + n]);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

EpisodeTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read trace: " + path);
  return read_trace_csv(in);
}

}  // namespace mapc
