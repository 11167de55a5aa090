#ifndef SQDLAB_UCJ_HPP
#define SQDLAB_UCJ_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sqdlab/determinant.hpp"
#include "sqdlab/orbitals.hpp"

namespace sqdlab::ucj {

using Eigen::MatrixXd;
using orbitals::T2Amplitudes;

// One rotation/phase layer of the UCJ operator.
struct UcjLayer {
  MatrixXd U;      // n_orb x n_orb orthogonal orbital rotation
  MatrixXd J_same; // symmetric, same-spin diagonal-Coulomb phases (rad)
  MatrixXd J_opp;  // symmetric, opposite-spin phases (rad)
};

struct UcjParams {
  std::vector<UcjLayer> layers;
  MatrixXd final_rotation; // measurement-basis projection

  int r() const { return int(layers.size()); }
  int n_orb() const { return int(final_rotation.rows()); }
};

// Orbital-pair connectivity for LUCJ pruning. Pairs are unordered;
// same-index pairs are meaningful for opp_spin (on-site alpha-beta).
struct Topology {
  std::set<std::pair<int, int>> same_spin_edges;
  std::set<std::pair<int, int>> opp_spin_edges;
  std::string name;

  bool has_same(int p, int q) const;
  bool has_opp(int p, int q) const;

  static Topology complete(int n_orb);
  // Shipped LUCJ default: consecutive same-spin pairs, on-site alpha-beta
  // pairs at every 4th orbital.
  static Topology line(int n_orb);
};

enum class GateKind { X, XXPlusYY, Phase, CPhase };

struct Gate {
  GateKind kind;
  int q1 = 0;
  int q2 = -1;        // second qubit for two-qubit gates
  double theta = 0.0; // XXPlusYY rotation angle / phase angle
  double beta = 0.0;  // XXPlusYY phase parameter
};

// Gate list over 2*n_orb qubits; everything after the X-preparation prefix
// conserves per-spin particle number.
struct Circuit {
  int n_orb = 0;
  std::vector<Gate> gates;

  int n_qubits() const { return 2 * n_orb; }
};

struct GateCensus {
  std::int64_t n_xxpyy = 0;
  std::int64_t n_cp = 0;
  std::int64_t n_two_qubit = 0; // n_xxpyy + n_cp
  std::int64_t n_cp_same = 0;   // within a spin register
  std::int64_t n_cp_opp = 0;    // across registers
};

struct CpHistogram {
  std::vector<double> edges;      // bins + 1 entries
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  double low_amplitude_fraction = 0.0; // |J| < 1% of dynamic range
};

// Double factorization of t2 into r (rotation, diagonal-Coulomb) layers.
// Surplus layers beyond rank(T) are identity/zero.
UcjParams from_t_amplitudes(const T2Amplitudes& t2, int r, int n_orb,
                            const MatrixXd& final_rotation);

// Frobenius norm of t2 minus the sum of the layers' induced two-body tensors.
double reconstruction_residual(const T2Amplitudes& t2, const UcjParams& params);

// Zero J entries absent from the topology; rotations untouched.
UcjParams prune_to_topology(const UcjParams& params, const Topology& topo);

// X-preparation of the reference determinant followed by the layered
// rotation / CP-phase / inverse-rotation structure and the final rotation.
// CPhase and Phase gates with |angle| <= angle_epsilon are dropped (an exact
// zero is always dropped).
Circuit synthesize_circuit(const UcjParams& params, const Determinant& reference,
                           double angle_epsilon = 0.0);

GateCensus gate_census(const Circuit& c);

CpHistogram cp_histogram(const UcjParams& params, int bins);

// Adjacent-pair Givens network realizing the orbital rotation Q on one spin
// register (offset 0 or n_orb). Appends XXPlusYY and Phase gates.
void append_orbital_rotation(Circuit& c, const MatrixXd& Q, int offset);

// Line-oriented text format: one gate per line, "GATE q1 [q2] [angles...]".
std::string to_text(const Circuit& c);
Circuit circuit_from_text(const std::string& text);

std::string to_json(const UcjParams& params);
UcjParams ucj_params_from_json(const std::string& text);

} // namespace sqdlab::ucj

#endif
