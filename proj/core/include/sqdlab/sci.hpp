#ifndef SQDLAB_SCI_HPP
#define SQDLAB_SCI_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqdlab/determinant.hpp"
#include "sqdlab/model.hpp"
#include "sqdlab/orbitals.hpp"

namespace sqdlab::sci {

using Eigen::VectorXd;
using model::ChainSpec;
using model::Hamiltonian;

// Ordered, deduplicated list of sector-valid determinants.
class DeterminantBasis {
public:
  DeterminantBasis() = default;
  explicit DeterminantBasis(std::vector<Determinant> dets);

  // Complete (n_up, n_down) sector over n_orb orbitals.
  static DeterminantBasis full_sector(int n_orb, int n_up, int n_down);

  std::size_t size() const { return dets_.size(); }
  bool empty() const { return dets_.empty(); }
  const std::vector<Determinant>& dets() const { return dets_; }
  const Determinant& operator[](std::size_t i) const { return dets_[i]; }
  // -1 when absent.
  int index_of(const Determinant& d) const;
  int n_up() const { return n_up_; }
  int n_down() const { return n_down_; }

  std::string to_text() const; // sorted "alpha_hex,beta_hex" lines
  static DeterminantBasis from_text(const std::string& text);

private:
  std::vector<Determinant> dets_;
  std::unordered_map<std::uint64_t, int> index_;
  int n_up_ = 0, n_down_ = 0;
};

struct GroundState {
  double energy = 0.0; // eV
  VectorXd vector;     // real amplitudes over basis
  DeterminantBasis basis;
};

struct ExcitationProfile {
  std::vector<double> total_weight;   // indexed by excitation number
  std::vector<double> covered_weight; // weight inside the given basis
};

// <di|H|dj> by the Slater-Condon rules (fermionic sign included).
double slater_condon(const Determinant& di, const Determinant& dj,
                     const Hamiltonian& H);

struct DavidsonOptions {
  double tol = 1e-8;   // relative residual
  int max_iter = 200;
  int restart = 32;    // subspace dimension cap
  int dense_cutoff = 64;
};

struct DavidsonResult {
  double eigenvalue = 0.0;
  VectorXd eigenvector;
  int iterations = 0;
  double residual = 0.0;
};

// Lowest eigenpair of a symmetric operator given by its action y = A x and
// its diagonal (used for preconditioning).
DavidsonResult davidson(
    const std::function<void(const VectorXd&, VectorXd&)>& apply,
    const VectorXd& diagonal, const DavidsonOptions& opts = {});

// Cached projected-Hamiltonian action over a determinant basis. Stores the
// strict upper triangle in CSR form plus the diagonal; connected pairs are
// found by single/double excitation enumeration.
class SciMatrix {
public:
  SciMatrix(const DeterminantBasis& basis, const Hamiltonian& H);
  void apply(const VectorXd& x, VectorXd& y) const;
  const VectorXd& diagonal() const { return diag_; }
  std::size_t dim() const { return diag_.size(); }
  std::size_t nonzeros() const { return cols_.size(); }

private:
  VectorXd diag_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::int32_t> cols_;
  std::vector<double> vals_;
};

// Lowest eigenpair of H projected onto the basis (Davidson; dense fallback
// for small dimensions).
GroundState diagonalize(const DeterminantBasis& basis, const Hamiltonian& H,
                        const DavidsonOptions& opts = {});

struct FciGuard {
  std::size_t max_dimension = 1'000'000;
};

GroundState fci_ground_state(const Hamiltonian& H, const ChainSpec& spec,
                             const FciGuard& guard = {},
                             const DavidsonOptions& opts = {});

// f = 1 - sum_{i in basis} |<g|i>|^2 for a full-sector ground state g.
double missing_fraction(const GroundState& g, const DeterminantBasis& basis);

// Weight of g per excitation number (electrons above the Fermi level of the
// n_occ lowest orbitals), with the covered portion inside `basis`. Rejects a
// degenerate Fermi level.
ExcitationProfile excitation_profile(const GroundState& g,
                                     const orbitals::OrbitalBasis& hf, int n_occ,
                                     const DeterminantBasis& basis);

// E_SQD(basis) - E_FCI; variational, so >= 0 up to solver tolerance.
double energy_error(const DeterminantBasis& basis, const Hamiltonian& H,
                    const GroundState& reference_fci);

// <S^2> of a state (moves through the S+ operator; diagnostic for singlets).
double spin_squared(const GroundState& g, int n_orb);

// Diagonal one-particle density per spatial orbital, summed over spins.
VectorXd orbital_occupations(const GroundState& g, int n_orb);

} // namespace sqdlab::sci

#endif
