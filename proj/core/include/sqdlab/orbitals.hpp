#ifndef SQDLAB_ORBITALS_HPP
#define SQDLAB_ORBITALS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sqdlab/model.hpp"

namespace sqdlab::orbitals {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using model::Hamiltonian;

enum class BasisKind { HF, KIN, HFPLUS };

// A single-particle basis: columns of C are molecular orbitals expressed in
// the chain tight-binding frame, ordered by ascending energy.
struct OrbitalBasis {
  BasisKind kind = BasisKind::KIN;
  MatrixXd C;
  VectorXd energies; // eV, ascending
};

// Symmetric matrix on the kinetic basis whose eigenvectors are the HF
// orbitals (kinetic-frame coefficients) and eigenvalues the HF energies.
struct MixMatrix {
  MatrixXd M;
};

enum class T2Source { MP2, FILE };

// t2[i,j,a,b] over (occ, occ, virt, virt) spatial-orbital blocks.
class T2Amplitudes {
public:
  T2Amplitudes() = default;
  T2Amplitudes(int n_occ, int n_virt)
      : no_(n_occ), nv_(n_virt),
        data_(std::size_t(n_occ) * n_occ * n_virt * n_virt, 0.0) {}

  int n_occ() const { return no_; }
  int n_virt() const { return nv_; }
  double& operator()(int i, int j, int a, int b) {
    return data_[((std::size_t(i) * no_ + j) * nv_ + a) * nv_ + b];
  }
  double operator()(int i, int j, int a, int b) const {
    return data_[((std::size_t(i) * no_ + j) * nv_ + a) * nv_ + b];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }
  T2Source source = T2Source::MP2;

private:
  int no_ = 0, nv_ = 0;
  std::vector<double> data_;
};

struct ScfOptions {
  double mixing = 0.5;      // density damping
  double tol = 1e-8;        // ||[F,D]|| convergence threshold
  int max_iter = 500;
};

struct HfResult {
  OrbitalBasis basis;
  double energy = 0.0; // total HF energy incl. e_core, eV
  int iterations = 0;
};

// Restricted closed-shell SCF (requires n_up == n_down).
HfResult solve_hf(const Hamiltonian& H, int n_up, int n_down,
                  const ScfOptions& opts = {});

// Eigenbasis of the one-body (kinetic) Hamiltonian.
OrbitalBasis kinetic_basis(const Hamiltonian& H);

// Mixing matrix M on the kinetic basis built from a converged HF basis.
MixMatrix build_mix_matrix(const OrbitalBasis& kin, const OrbitalBasis& hf);

// HF+ basis: eigenstates of M' = 2M - diag(diag(M)), mapped back to the
// tight-binding frame.
OrbitalBasis hfplus_basis(const Hamiltonian& H, const OrbitalBasis& hf);

// MP2 amplitudes t2[i,j,a,b] = V'(i,a,j,b) / (e_i + e_j - e_a - e_b) in the
// given basis (n_occ lowest orbitals occupied).
T2Amplitudes compute_t2(const Hamiltonian& H, const OrbitalBasis& basis,
                        int n_occ);

double mp2_correlation_energy(const Hamiltonian& H, const OrbitalBasis& basis,
                              const T2Amplitudes& t2);

// JSON: {shape: [no, no, nv, nv], data: flat, source: "CCSD"|"MP2"}.
std::string to_json(const T2Amplitudes& t2);
T2Amplitudes t2_from_json(const std::string& text);

// First nonzero entry of each column made positive; applied by every
// basis constructor so coefficient signs are reproducible.
void fix_column_phases(MatrixXd& C);

} // namespace sqdlab::orbitals

#endif
