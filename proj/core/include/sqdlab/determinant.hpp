#ifndef SQDLAB_DETERMINANT_HPP
#define SQDLAB_DETERMINANT_HPP

#include <bit>
#include <cstdint>
#include <functional>

namespace sqdlab {

// Occupation bitmasks over spatial orbitals; bit i of alpha maps to qubit i,
// bit i of beta to qubit n_orb + i.
struct Determinant {
  std::uint32_t alpha = 0;
  std::uint32_t beta = 0;

  friend bool operator==(const Determinant&, const Determinant&) = default;
  friend auto operator<=>(const Determinant&, const Determinant&) = default;

  std::uint64_t key() const {
    return (std::uint64_t(beta) << 32) | alpha;
  }
  int n_alpha() const { return std::popcount(alpha); }
  int n_beta() const { return std::popcount(beta); }

  // Raw measurement bitstring: alpha register in the low n_orb bits.
  std::uint32_t bits(int n_orb) const {
    return alpha | (beta << n_orb);
  }
  static Determinant from_bits(std::uint32_t bits, int n_orb) {
    const std::uint32_t mask = (1u << n_orb) - 1;
    return {bits & mask, (bits >> n_orb) & mask};
  }
};

struct DeterminantHash {
  std::size_t operator()(const Determinant& d) const {
    std::uint64_t k = d.key();
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return std::size_t(k);
  }
};

} // namespace sqdlab

#endif
