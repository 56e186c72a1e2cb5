#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mapc {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// Splits one master seed into independent named streams ("topology",
// "sta_schedule", "noise/<algo>", ...). Same (master, name) -> same stream.
class SeedStreams {
 public:
  explicit SeedStreams(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const { return master_; }
  std::uint64_t seed_for(std::string_view name) const;
  Rng stream(std::string_view name) const { return Rng(seed_for(name)); }

 private:
  std::uint64_t master_;
};

}  // namespace mapc
