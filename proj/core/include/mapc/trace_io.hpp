#pragma once

// CSV form of an EpisodeTrace. The first line is a '#' metadata comment
// (algorithm, deployment hash, seed, counters); the rest is plain CSV:
//
//   txop,sharing_ap,scheduled_sta,active_ap_count,sum_rate_mbps,
//   per_ap_rate_0..per_ap_rate_{N-1},qos_violations,windowed_reward,current_Q
//
// Reals are written with 17 significant digits so a reader recovers the
// exact doubles. windowed_reward is empty except on window-closing TXOPs
// (and stays empty when the reward is undefined).

#include <iosfwd>
#include <string>

#include "mapc/environment.hpp"

namespace mapc {

std::string format_real(double v);

void write_trace_csv(const EpisodeTrace& trace, std::ostream& out);
void write_trace_csv(const EpisodeTrace& trace, const std::string& path);

EpisodeTrace read_trace_csv(std::istream& in);
EpisodeTrace read_trace_csv(const std::string& path);

}  // namespace mapc
