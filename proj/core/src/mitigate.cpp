#include "sqdlab/mitigate.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sqdlab::mitigate {

Mode mode_from_string(const std::string& s) {
  if (s == "none") return Mode::None;
  if (s == "postselect") return Mode::Postselect;
  if (s == "recover") return Mode::Recover;
  throw std::invalid_argument("unknown mitigation mode '" + s + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::None: return "none";
    case Mode::Postselect: return "postselect";
    default: return "recover";
  }
}

OccupancyStats occupancy_stats(const SampleSet& s) {
  if (s.total_shots < 1)
    throw std::invalid_argument("occupancy_stats: empty sample set");
  const int n_bits = 2 * s.n_orb;
  OccupancyStats stats;
  stats.mean_occ.assign(n_bits, 0.0);
  for (const auto& [bits, count] : s.counts)
    for (int q = 0; q < n_bits; ++q)
      if (bits >> q & 1) stats.mean_occ[q] += double(count);
  for (auto& m : stats.mean_occ) m /= double(s.total_shots);
  return stats;
}

SampleSet postselect(const SampleSet& s, int n_up, int n_down) {
  SampleSet out;
  out.n_orb = s.n_orb;
  out.origin = s.origin;
  const std::uint32_t mask = (1u << s.n_orb) - 1;
  for (const auto& [bits, count] : s.counts) {
    if (std::popcount(bits & mask) != n_up) continue;
    if (std::popcount(bits >> s.n_orb) != n_down) continue;
    out.counts[bits] += count;
    out.total_shots += count;
  }
  return out;
}

namespace {

// Move the register's popcount to the target by flipping, at each step, the
// bit whose flip most reduces sum_j (bit_j - mean_j)^2.
std::uint32_t recover_register(std::uint32_t reg, int n_orb, int target,
                               const double* mean, bool stochastic,
                               std::mt19937_64& rng) {
  int count = std::popcount(reg);
  while (count != target) {
    const bool clearing = count > target;
    int best = -1;
    if (!stochastic) {
      double best_mean = 0.0;
      for (int j = 0; j < n_orb; ++j) {
        const bool occ = reg >> j & 1;
        if (occ != clearing) continue;
        // Clearing wants the lowest mean, setting the highest.
        if (best < 0 || (clearing ? mean[j] < best_mean : mean[j] > best_mean)) {
          best = j;
          best_mean = mean[j];
        }
      }
    } else {
      std::vector<double> weights(n_orb, 0.0);
      double total = 0.0;
      for (int j = 0; j < n_orb; ++j) {
        const bool occ = reg >> j & 1;
        if (occ != clearing) continue;
        weights[j] = std::abs(double(occ) - mean[j]);
        total += weights[j];
      }
      std::uniform_real_distribution<double> u(0.0, total);
      double x = u(rng);
      for (int j = 0; j < n_orb; ++j) {
        if (weights[j] <= 0.0) continue;
        x -= weights[j];
        best = j;
        if (x <= 0.0) break;
      }
    }
    reg ^= 1u << best;
    count += clearing ? -1 : 1;
  }
  return reg;
}

} // namespace

SampleSet recover(const SampleSet& s, int n_up, int n_down,
                  const OccupancyStats& stats, std::uint64_t seed,
                  bool stochastic) {
  const int n = s.n_orb;
  if (int(stats.mean_occ.size()) != 2 * n)
    throw std::invalid_argument("recover: stats dimension mismatch");
  std::mt19937_64 rng(seed);
  SampleSet out;
  out.n_orb = n;
  out.origin = s.origin;
  const std::uint32_t mask = (1u << n) - 1;
  for (const auto& [bits, count] : s.counts) {
    std::uint32_t a = bits & mask;
    std::uint32_t b = bits >> n;
    if (!stochastic) {
      a = recover_register(a, n, n_up, stats.mean_occ.data(), false, rng);
      b = recover_register(b, n, n_down, stats.mean_occ.data() + n, false, rng);
      out.counts[a | (b << n)] += count;
      out.total_shots += count;
    } else {
      for (std::int64_t shot = 0; shot < count; ++shot) {
        const std::uint32_t ra =
            recover_register(a, n, n_up, stats.mean_occ.data(), true, rng);
        const std::uint32_t rb =
            recover_register(b, n, n_down, stats.mean_occ.data() + n, true, rng);
        ++out.counts[ra | (rb << n)];
        ++out.total_shots;
      }
    }
  }
  return out;
}

} // namespace sqdlab::mitigate
