#ifndef SQDLAB_LAB_HPP
#define SQDLAB_LAB_HPP

#include <optional>
#include <string>
#include <vector>

#include "sqdlab/mitigate.hpp"
#include "sqdlab/model.hpp"
#include "sqdlab/orbitals.hpp"
#include "sqdlab/qsim.hpp"
#include "sqdlab/sci.hpp"
#include "sqdlab/ucj.hpp"

namespace sqdlab::lab {

using model::ChainSpec;
using model::Hamiltonian;
using model::SurrogateParams;
using orbitals::BasisKind;

enum class Method { IdealSqd, Ucj, Lucj };
Method method_from_string(const std::string& s);
std::string to_string(Method m);
BasisKind basis_kind_from_string(const std::string& s);
std::string to_string(BasisKind k);

struct NoiseConfig {
  std::optional<double> p_flip;            // explicit flip probability
  std::optional<double> calibrate_target;  // or calibrate to this fraction
  mitigate::Mode mitigation = mitigate::Mode::None;
};

struct ExperimentConfig {
  ChainSpec chain;
  SurrogateParams surrogate;
  std::optional<std::string> integrals_file; // chain Hamiltonian JSON path
  BasisKind basis_kind = BasisKind::HF;
  Method method = Method::IdealSqd;
  int r = 1;
  std::string topology = "line";
  std::vector<double> shots_schedule;       // ascending
  double master_shots = 3162277.0;          // 10^6.5
  int batches = 10;                         // energy-error batches; 0 disables
  std::uint64_t seed = 1;
  double chemical_accuracy = 0.027;         // eV
  std::optional<NoiseConfig> noise;

  static std::vector<double> default_schedule(); // 10^1 .. 10^5.5, half decades
  void validate() const;
};

struct CurvePoint {
  double shots = 0.0;
  double f_expected = 0.0;
  double unique_expected = 0.0;
  double e_err_mean = 0.0; // NaN when batches == 0 or no valid batch
  double e_err_std = 0.0;
};

struct ConvergenceCurve {
  std::vector<CurvePoint> points;
};

// Everything run_convergence resolves along the way, kept for reporting.
struct ConvergenceResult {
  ConvergenceCurve curve;
  double e_fci = 0.0;
  double master_unique = 0.0;      // distinct sector-valid dets in master run
  double calibrated_p_flip = 0.0;  // 0 when no noise configured
  ucj::GateCensus census;          // zero counts for IdealSqd
};

ConvergenceResult run_convergence(const ExperimentConfig& cfg);

// First log-linear crossing of the mean energy error below the threshold;
// empty when never reached.
std::optional<double> shots_to_accuracy(const ConvergenceCurve& curve,
                                        double threshold);
// Expected unique determinant count at the crossing.
std::optional<double> dets_at_accuracy(const ConvergenceCurve& curve,
                                       double threshold);

// Least-squares slope of log y versus log L.
double fit_power_law(const std::vector<std::pair<double, double>>& points);

// E0(Sz = 1 sector) - E0(Sz = 0 sector).
double spin_gap(const Hamiltonian& H, const ChainSpec& spec);

// Shared pipeline pieces (also used by the CLI subcommands).
Hamiltonian build_chain(const ExperimentConfig& cfg);
orbitals::OrbitalBasis compute_basis(const Hamiltonian& H, BasisKind kind,
                                     int n_occ);
ucj::Topology topology_by_name(const std::string& name, int n_orb);
// Circuit-backed or ideal sampling distribution over the sector, as a
// SectorState in the chosen molecular-orbital frame.
qsim::SectorState prepare_state(const ExperimentConfig& cfg,
                                const Hamiltonian& H_mo,
                                const Eigen::VectorXd& mo_energies,
                                const sci::GroundState& fci,
                                ucj::GateCensus* census_out = nullptr);

// Sector-valid determinants present in a sample set (invalid strings are
// skipped).
sci::DeterminantBasis basis_from_samples(const qsim::SampleSet& s, int n_up,
                                         int n_down);

std::string to_csv(const ConvergenceCurve& curve);
ConvergenceCurve curve_from_csv(const std::string& text);
std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

} // namespace sqdlab::lab

#endif
