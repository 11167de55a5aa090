#ifndef SQDLAB_QSIM_HPP
#define SQDLAB_QSIM_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sqdlab/determinant.hpp"
#include "sqdlab/ucj.hpp"

namespace sqdlab::qsim {

using ucj::Circuit;

// Statevector restricted to the fixed (n_up, n_down) particle-number block.
// Amplitude layout: amps[ia * n_beta_strings + ib] (beta index fastest).
struct SectorState {
  int n_orb = 0;
  int n_up = 0, n_down = 0;
  std::vector<std::uint32_t> alpha_strings; // ascending bitmask order
  std::vector<std::uint32_t> beta_strings;
  std::vector<std::complex<double>> amps;

  std::size_t dim() const { return alpha_strings.size() * beta_strings.size(); }
  Determinant determinant(std::size_t flat_index) const;
  double norm() const;
};

enum class SampleOrigin { Simulated, Noisy, External };

// Multiset of measured bitstrings. Bitstrings carry the alpha register in
// the low n_orb bits.
struct SampleSet {
  int n_orb = 0;
  std::map<std::uint32_t, std::int64_t> counts;
  std::int64_t total_shots = 0;
  SampleOrigin origin = SampleOrigin::Simulated;
};

// Exact evolution in the particle-number sector fixed by the circuit's
// X-preparation prefix. Rejects gates that do not conserve per-register
// particle number.
SectorState simulate_sector(const Circuit& c, int n_up, int n_down);

// Full 2^(2 n_orb) statevector; guarded to 2*n_orb <= 16 unless overridden.
std::vector<std::complex<double>> simulate_full(const Circuit& c,
                                                bool override_size_guard = false);

// Multinomial sampling from |amplitude|^2; deterministic for a given seed.
SampleSet sample(const SectorState& state, std::int64_t shots, std::uint64_t seed);

// Flip each bit of each shot independently with probability p_flip.
SampleSet apply_bitflip_noise(const SampleSet& s, double p_flip, std::uint64_t seed);

// Probability that an n_target-electron register keeps its electron count
// under independent bit flips, and the p_flip solving for a target
// correct-number fraction in both registers (closed form + bisection).
double correct_number_probability(int n_orb, int n_up, int n_down, double p_flip);
double calibrate_bitflip(int n_orb, int n_up, int n_down, double target_fraction);

// E[# distinct outcomes after S shots] = sum_i (1 - (1 - p_i)^S).
double expected_unique(const std::vector<double>& probs, double shots);

// E[missing ground-state fraction after S shots] = sum_i w_i (1 - p_i)^S.
// Entries are matched by index; pass aligned vectors.
double expected_missing_fraction(const std::vector<double>& weights,
                                 const std::vector<double>& probs, double shots);

// CSV with header "bitstring,count"; bitstrings written
// most-significant-qubit-first.
std::string to_csv(const SampleSet& s);
SampleSet sample_set_from_csv(const std::string& text);

// All C(n_orb, n_elec) occupation bitmasks in ascending order.
std::vector<std::uint32_t> enumerate_strings(int n_orb, int n_elec);

} // namespace sqdlab::qsim

#endif
