// Acceptance gate for the chain-SQD laboratory. Each criterion prints one
// PASS/FAIL line; the exit status is the number of failures.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "sqdlab/lab.hpp"
#include "sqdlab/mitigate.hpp"
#include "sqdlab/model.hpp"
#include "sqdlab/orbitals.hpp"
#include "sqdlab/qsim.hpp"
#include "sqdlab/sci.hpp"
#include "sqdlab/ucj.hpp"

using namespace sqdlab;

namespace {

model::Hamiltonian chain(int L) {
  return model::extend_to_chain(model::surrogate_dimer({}),
                                model::ChainSpec::with_default_filling(L));
}

struct Front {
  model::Hamiltonian H_mo;
  orbitals::OrbitalBasis frame; // identity frame with MO energies
  int n_occ = 0;
};

Front hf_front(int L) {
  const auto H = chain(L);
  const int n_occ = 3 * L / 2;
  const auto hf = orbitals::solve_hf(H, n_occ, n_occ);
  Front f;
  f.H_mo = model::rotate_integrals(H, hf.basis.C);
  f.frame.kind = hf.basis.kind;
  f.frame.C = Eigen::MatrixXd::Identity(H.n_orb, H.n_orb);
  f.frame.energies = hf.basis.energies;
  f.n_occ = n_occ;
  return f;
}

// --- criterion 1: exact projected diagonalization on the smallest chain ---

bool criterion_1() {
  const auto H = chain(2);
  const auto basis = sci::DeterminantBasis::full_sector(4, 3, 3);
  const auto dense = oracle::dense_sector_hamiltonian(H, 3, 3);

  double max_dev = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      max_dev = std::max(max_dev, std::abs(sci::slater_condon(basis[i], basis[j], H) -
                                           dense(i, j)));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  const double e_dense = es.eigenvalues()[0];
  const double e_sci = sci::diagonalize(basis, H).energy;
  std::printf("    matrix deviation %.3e, energy deviation %.3e\n", max_dev,
              std::abs(e_sci - e_dense));
  return max_dev < 1e-10 && std::abs(e_sci - e_dense) < 1e-10;
}

// --- criterion 2: sector simulator equals the full-register simulator ---

bool criterion_2() {
  const auto f = hf_front(2);
  const int n = 4;
  const auto t2 = orbitals::compute_t2(f.H_mo, f.frame, f.n_occ);
  const auto params =
      ucj::from_t_amplitudes(t2, 2, n, Eigen::MatrixXd::Identity(n, n));
  const Determinant ref{0b0111, 0b0111};
  const auto circuit = ucj::synthesize_circuit(params, ref);

  const auto sector = qsim::simulate_sector(circuit, 3, 3);
  const auto full = qsim::simulate_full(circuit);

  double max_dev = 0.0, leakage = 0.0;
  std::vector<bool> in_sector(full.size(), false);
  for (std::size_t ia = 0; ia < sector.alpha_strings.size(); ++ia)
    for (std::size_t ib = 0; ib < sector.beta_strings.size(); ++ib) {
      const std::size_t flat = ia * sector.beta_strings.size() + ib;
      const std::size_t idx =
          sector.alpha_strings[ia] | (std::size_t(sector.beta_strings[ib]) << n);
      in_sector[idx] = true;
      max_dev = std::max(max_dev, std::abs(sector.amps[flat] - full[idx]));
    }
  for (std::size_t idx = 0; idx < full.size(); ++idx)
    if (!in_sector[idx]) leakage += std::norm(full[idx]);
  std::printf("    amplitude deviation %.3e, leakage %.3e\n", max_dev, leakage);
  return max_dev < 1e-10 && leakage < 1e-10;
}

// --- criterion 3: factorization exactness and monotonicity ---

bool criterion_3() {
  bool ok = true;
  for (const int L : {2, 4}) {
    const auto f = hf_front(L);
    const int n = f.H_mo.n_orb;
    const int rank = f.n_occ * (n - f.n_occ);
    const auto t2 = orbitals::compute_t2(f.H_mo, f.frame, f.n_occ);
    double prev = std::numeric_limits<double>::infinity();
    double at_rank = -1.0;
    for (int r = 1; r <= rank + 1; ++r) {
      const auto params =
          ucj::from_t_amplitudes(t2, r, n, Eigen::MatrixXd::Identity(n, n));
      const double res = ucj::reconstruction_residual(t2, params);
      if (res > prev + 1e-12) ok = false;
      prev = res;
      if (r == rank) at_rank = res;
    }
    std::printf("    L=%d residual at full rank %d: %.3e\n", L, rank, at_rank);
    if (at_rank > 1e-10) ok = false;
  }
  return ok;
}

// --- criterion 4: sampling expectation formulas against Monte Carlo ---

bool criterion_4() {
  const auto spec = model::ChainSpec::with_default_filling(2);
  const auto fci = sci::fci_ground_state(chain(2), spec);
  std::vector<double> w(fci.basis.size()), p(fci.basis.size());
  for (std::size_t i = 0; i < fci.basis.size(); ++i) {
    w[i] = fci.vector[Eigen::Index(i)] * fci.vector[Eigen::Index(i)];
    p[i] = w[i];
  }
  const double S = 50.0;

  const double u_closed = qsim::expected_unique(p, S);
  const auto u_mc = oracle::mc_expected_unique(p, std::int64_t(S), 10000, 17);
  const double u_dev = std::abs(u_closed - u_mc.mean);
  const bool u_ok = u_dev <= std::max(4.0 * u_mc.stderr_, 0.02 * u_closed);

  const double f_closed = qsim::expected_missing_fraction(w, p, S);
  const auto f_mc = oracle::mc_missing_fraction(w, p, std::int64_t(S), 200, 23);
  const double f_dev = std::abs(f_closed - f_mc.mean);
  const bool f_ok = f_dev <= 3.0 * f_mc.stderr_ + 1e-4;

  std::printf("    unique: closed %.4f vs MC %.4f (stderr %.4f)\n", u_closed,
              u_mc.mean, u_mc.stderr_);
  std::printf("    missing: closed %.5f vs MC %.5f (stderr %.5f)\n", f_closed,
              f_mc.mean, f_mc.stderr_);
  return u_ok && f_ok;
}

// --- criterion 5: circuit fidelity ordering on the full-width chain ---

bool criterion_5() {
  const auto run = [](lab::Method m, int r) {
    lab::ExperimentConfig cfg;
    cfg.chain = model::ChainSpec::with_default_filling(6);
    cfg.method = m;
    cfg.r = r;
    cfg.shots_schedule = {316228.0};
    cfg.master_shots = 316228.0;
    cfg.batches = 0;
    cfg.seed = 1;
    return lab::run_convergence(cfg).curve.points[0].f_expected;
  };
  const double f_ideal = run(lab::Method::IdealSqd, 1);
  const double f_ucj5 = run(lab::Method::Ucj, 5);
  const double f_ucj1 = run(lab::Method::Ucj, 1);
  const double f_lucj1 = run(lab::Method::Lucj, 1);
  std::printf("    f: ideal %.4f <= ucj(r=5) %.4f <= ucj(r=1) %.4f <= "
              "lucj(r=1) %.4f\n",
              f_ideal, f_ucj5, f_ucj1, f_lucj1);
  return f_ideal <= f_ucj5 + 1e-9 && f_ucj5 <= f_ucj1 + 1e-9 &&
         f_ucj1 <= f_lucj1 + 1e-9 && f_ideal < 0.05;
}

// --- criterion 6: chemical accuracy reached with finite shots ---

bool criterion_6() {
  bool ok = true;
  for (const int L : {2, 4}) {
    lab::ExperimentConfig cfg;
    cfg.chain = model::ChainSpec::with_default_filling(L);
    cfg.shots_schedule = {10.0, 100.0, 1000.0, 10000.0, 100000.0};
    cfg.master_shots = 316228.0;
    cfg.batches = 5;
    cfg.seed = 1;
    const auto res = lab::run_convergence(cfg);
    const auto s = lab::shots_to_accuracy(res.curve, cfg.chemical_accuracy);
    const double last = res.curve.points.back().e_err_mean;
    if (s)
      std::printf("    L=%d crosses %.0f meV at ~%.0f shots (final error "
                  "%.2e eV)\n",
                  L, 1e3 * cfg.chemical_accuracy, *s, last);
    else
      std::printf("    L=%d never reaches the threshold\n", L);
    ok = ok && s.has_value() && std::isfinite(*s) && last < cfg.chemical_accuracy;
  }
  return ok;
}

// --- criterion 7: calibrated noise and configuration recovery ---

bool criterion_7() {
  const int L = 6, n = 12, ne = 9;
  const auto spec = model::ChainSpec::with_default_filling(L);
  const auto fci = sci::fci_ground_state(chain(L), spec);

  qsim::SectorState state;
  state.n_orb = n;
  state.n_up = ne;
  state.n_down = ne;
  state.alpha_strings = qsim::enumerate_strings(n, ne);
  state.beta_strings = state.alpha_strings;
  state.amps.assign(state.dim(), {0.0, 0.0});
  for (std::size_t i = 0; i < fci.basis.size(); ++i)
    state.amps[i] = fci.vector[Eigen::Index(i)];

  const double p = qsim::calibrate_bitflip(n, ne, ne, 0.35);
  const double closed = qsim::correct_number_probability(n, ne, ne, p);

  const auto raw = qsim::sample(state, 7000, 2);
  const auto noisy = qsim::apply_bitflip_noise(raw, p, 3);
  const auto kept = mitigate::postselect(noisy, ne, ne);
  const double fraction = double(kept.total_shots) / double(noisy.total_shots);

  const auto stats = mitigate::occupancy_stats(noisy);
  const auto rec = mitigate::recover(noisy, ne, ne, stats, 4);
  const auto basis_kept = lab::basis_from_samples(kept, ne, ne);
  const auto basis_rec = lab::basis_from_samples(rec, ne, ne);

  std::printf("    p_flip %.5f, closed-form retention %.4f, empirical %.4f\n",
              p, closed, fraction);
  std::printf("    unique configurations: postselect %zu, recover %zu\n",
              basis_kept.size(), basis_rec.size());
  return std::abs(closed - 0.35) < 1e-6 && std::abs(fraction - 0.35) < 0.02 &&
         basis_rec.size() > basis_kept.size() &&
         rec.total_shots == noisy.total_shots;
}

// --- criterion 8: two-qubit gate count scaling ---

bool criterion_8() {
  std::vector<std::pair<double, double>> pts;
  for (const int L : {2, 4, 6}) {
    const auto f = hf_front(L);
    const int n = f.H_mo.n_orb;
    const auto t2 = orbitals::compute_t2(f.H_mo, f.frame, f.n_occ);
    const auto params =
        ucj::from_t_amplitudes(t2, 1, n, Eigen::MatrixXd::Identity(n, n));
    const std::uint32_t ref = (1u << f.n_occ) - 1;
    const auto circuit =
        ucj::synthesize_circuit(params, Determinant{ref, ref});
    const auto census = ucj::gate_census(circuit);
    // The smallest chain synthesizes several exactly-zero phase angles that
    // are dropped from the circuit, so the asymptotic fit uses L >= 4.
    if (L >= 4) pts.emplace_back(double(L), double(census.n_two_qubit));
    std::printf("    L=%d: %lld two-qubit gates\n", L,
                (long long)census.n_two_qubit);
  }
  const double alpha = lab::fit_power_law(pts);
  std::printf("    fitted exponent %.3f\n", alpha);
  return alpha >= 2.0 && alpha <= 2.4;
}

// --- criterion 9: spin-gap ratios against the ideal spin chain ---

// Lowest energy of the open Heisenberg chain (J = 1) in a fixed-Sz block.
double heisenberg_block_min(int n_sites, int n_up) {
  std::vector<std::uint32_t> states;
  for (std::uint32_t s = 0; s < (1u << n_sites); ++s)
    if (std::popcount(s) == n_up) states.push_back(s);
  const int dim = int(states.size());
  Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const std::uint32_t s = states[i];
    for (int b = 0; b + 1 < n_sites; ++b) {
      const bool u1 = s >> b & 1, u2 = s >> (b + 1) & 1;
      if (u1 == u2) {
        Hm(i, i) += 0.25;
      } else {
        Hm(i, i) -= 0.25;
        const std::uint32_t t = s ^ (3u << b);
        const auto it = std::lower_bound(states.begin(), states.end(), t);
        Hm(i, int(it - states.begin())) += 0.5;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hm);
  return es.eigenvalues()[0];
}

bool criterion_9() {
  std::vector<double> gaps, ideal;
  for (const int L : {2, 4, 6}) {
    const auto spec = model::ChainSpec::with_default_filling(L);
    const auto H = model::zero_interplaquette_coulomb(chain(L));
    gaps.push_back(lab::spin_gap(H, spec));
    ideal.push_back(heisenberg_block_min(L, L / 2 + 1) -
                    heisenberg_block_min(L, L / 2));
  }
  bool ok = true;
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    const double ratio = gaps[k] / gaps[0];
    const double ref = ideal[k] / ideal[0];
    const double dev = std::abs(ratio / ref - 1.0);
    std::printf("    gap(L=%d)/gap(L=2): model %.4f vs spin chain %.4f "
                "(deviation %.1f%%)\n",
                2 * int(k + 1), ratio, ref, 100.0 * dev);
    if (dev > 0.05) ok = false;
  }
  return ok;
}

// --- criterion 10: solver robustness and variational monotonicity ---

bool criterion_10() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double max_dev = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim =
        (trial < 2) ? 2000 : 50 + int(rng() % 950); // two full-size cases
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      A(i, i) = -2.0 + 0.05 * i + 0.5 * u(rng);
      for (int k = 0; k < 6; ++k) {
        const int j = int(rng() % dim);
        const double v = 0.3 * u(rng);
        A(i, j) += v;
        A(j, i) += v;
      }
    }
    const auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      y = A * x;
    };
    const auto res = sci::davidson(apply, A.diagonal());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double dev = std::abs(res.eigenvalue - es.eigenvalues()[0]) /
                       std::max(1.0, std::abs(es.eigenvalues()[0]));
    max_dev = std::max(max_dev, dev);
    if (dev > 1e-8) ok = false;
  }
  std::printf("    worst relative eigenvalue deviation %.3e over 50 matrices\n",
              max_dev);

  // Variational monotonicity on nested subspaces of the L=2 sector.
  const auto spec = model::ChainSpec::with_default_filling(2);
  const auto H = chain(2);
  const auto fci = sci::fci_ground_state(H, spec);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 100; ++trial) {
    std::vector<Determinant> b1, b2;
    for (std::size_t i = 0; i < fci.basis.size(); ++i) {
      const int coin = int(rng() % 3);
      if (coin >= 1) b2.push_back(fci.basis[i]);
      if (coin == 2) b1.push_back(fci.basis[i]);
    }
    if (b1.empty() || b2.empty()) continue;
    const double e1 = sci::energy_error(sci::DeterminantBasis(b1), H, fci);
    const double e2 = sci::energy_error(sci::DeterminantBasis(b2), H, fci);
    if (e1 < -1e-9 || e2 > e1 + 1e-9) ok = false;
    ++checked;
  }
  std::printf("    %d nested basis pairs checked\n", checked);
  return ok && checked >= 100;
}

struct Criterion {
  const char* label;
  bool (*fn)();
};

} // namespace

int main() {
  const Criterion criteria[] = {
      {"exact diagonalization matches the dense oracle", criterion_1},
      {"sector simulator matches the full-register simulator", criterion_2},
      {"amplitude factorization is exact at full rank and monotone",
       criterion_3},
      {"closed-form sampling expectations match Monte Carlo", criterion_4},
      {"missing fraction orders ideal < deep circuit < shallow < local",
       criterion_5},
      {"ideal sampling reaches chemical accuracy at finite shots",
       criterion_6},
      {"noise calibration hits its retention target and recovery beats "
       "postselection",
       criterion_7},
      {"two-qubit gate count scales as L^2.0-2.4", criterion_8},
      {"local-moment spin-gap ratios track the ideal spin chain",
       criterion_9},
      {"iterative solver agrees with dense solvers and stays variational",
       criterion_10},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    bool pass = false;
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", index,
                c.label);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures == 0)
    std::printf("all %d criteria passed\n", index);
  else
    std::printf("%d of %d criteria failed\n", failures, index);
  return failures;
}
