#ifndef SQDLAB_MITIGATE_HPP
#define SQDLAB_MITIGATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sqdlab/qsim.hpp"

namespace sqdlab::mitigate {

using qsim::SampleSet;

enum class Mode { None, Postselect, Recover };
Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

// Per-bit mean occupation over every shot of the raw sample set.
struct OccupancyStats {
  std::vector<double> mean_occ; // one entry per qubit, in [0, 1]
};

OccupancyStats occupancy_stats(const SampleSet& s);

// Keep only bitstrings whose per-register popcounts match the targets.
SampleSet postselect(const SampleSet& s, int n_up, int n_down);

// Per register, greedily flip the bit whose flip most reduces the squared
// distance to the dataset mean occupations until the electron count matches.
// Deterministic (lowest-orbital tie-break); the stochastic variant flips
// with probability proportional to |bit - mean| instead.
SampleSet recover(const SampleSet& s, int n_up, int n_down,
                  const OccupancyStats& stats, std::uint64_t seed,
                  bool stochastic = false);

} // namespace sqdlab::mitigate

#endif
