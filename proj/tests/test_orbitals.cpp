#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "sqdlab/model.hpp"
#include "sqdlab/orbitals.hpp"
#include "sqdlab/sci.hpp"

using namespace sqdlab;
using model::ChainSpec;
using model::Hamiltonian;

namespace {

Hamiltonian chain(int L) {
  return model::extend_to_chain(model::surrogate_dimer({}),
                                ChainSpec::with_default_filling(L));
}

Hamiltonian kinetic_only(int L) {
  auto H = chain(L);
  std::fill(H.V.data().begin(), H.V.data().end(), 0.0);
  return H;
}

} // namespace

TEST_CASE("kinetic basis diagonalizes h") {
  SUBCASE("already diagonal") {
    Hamiltonian H;
    H.n_orb = 3;
    H.h = Eigen::Vector3d(2.0, -1.0, 0.5).asDiagonal();
    H.V = model::TwoBodyTensor(3);
    const auto b = orbitals::kinetic_basis(H);
    CHECK(b.energies[0] == doctest::Approx(-1.0));
    CHECK(b.energies[2] == doctest::Approx(2.0));
    CHECK((b.C.transpose() * H.h * b.C -
           Eigen::MatrixXd(b.energies.asDiagonal()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  SUBCASE("textbook 2x2") {
    Hamiltonian H;
    H.n_orb = 2;
    H.h.resize(2, 2);
    H.h << 0.0, 1.0, 1.0, 0.0;
    H.V = model::TwoBodyTensor(2);
    const auto b = orbitals::kinetic_basis(H);
    CHECK(b.energies[0] == doctest::Approx(-1.0));
    CHECK(b.energies[1] == doctest::Approx(1.0));
    CHECK(b.C(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(b.C(1, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(b.C(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  SUBCASE("L=6 surrogate residual") {
    const auto H = chain(6);
    const auto b = orbitals::kinetic_basis(H);
    Eigen::MatrixXd D = b.C.transpose() * H.h * b.C;
    D.diagonal().setZero();
    CHECK(D.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::is_sorted(b.energies.begin(), b.energies.end()));
  }
}

TEST_CASE("solve_hf reduces to the kinetic basis without interactions") {
  const auto H = kinetic_only(2);
  const auto kin = orbitals::kinetic_basis(H);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  CHECK((hf.basis.C - kin.C).cwiseAbs().maxCoeff() < 1e-9);
  double e = H.e_core;
  for (int i = 0; i < 3; ++i) e += 2.0 * kin.energies[i];
  CHECK(hf.energy == doctest::Approx(e).epsilon(1e-10));
}

TEST_CASE("solve_hf matches a brute-force rotation search") {
  const auto H = chain(2);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const double brute = oracle::random_rotation_hf(H, 3, 1000, 17);
  // SCF is a stationary point; the random search cannot do better than it by
  // more than its own resolution.
  CHECK(hf.energy <= brute + 1e-6);
  CHECK(brute <= hf.energy + 0.2); // the search does find the same basin
}

TEST_CASE("HF energy is variational against FCI") {
  const auto spec = ChainSpec::with_default_filling(2);
  const auto H = chain(2);
  const auto hf = orbitals::solve_hf(H, spec.n_up, spec.n_down);
  const auto fci = sci::fci_ground_state(H, spec);
  CHECK(hf.energy >= fci.energy - 1e-9);
}

TEST_CASE("solve_hf rejects open shells") {
  const auto H = chain(2);
  CHECK_THROWS_AS(orbitals::solve_hf(H, 3, 2), std::invalid_argument);
}

TEST_CASE("HF energy invariant under orbital permutation") {
  const auto H = chain(2);
  const int n = H.n_orb;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) P((j + 2) % n, j) = 1.0;
  const auto Hp = model::rotate_integrals(H, P);
  const auto e0 = orbitals::solve_hf(H, 3, 3).energy;
  const auto e1 = orbitals::solve_hf(Hp, 3, 3).energy;
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-8));
}

TEST_CASE("mix matrix reproduces the HF basis") {
  const auto H = chain(2);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const auto kin = orbitals::kinetic_basis(H);
  const auto mix = orbitals::build_mix_matrix(kin, hf.basis);
  CHECK((mix.M - mix.M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mix.M);
  // Eigenvectors back in the tight-binding frame match HF columns up to
  // phase and energy ordering.
  Eigen::MatrixXd C = kin.C * es.eigenvectors();
  orbitals::fix_column_phases(C);
  CHECK((C - hf.basis.C).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((es.eigenvalues() - hf.basis.energies).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hfplus with diagonal mix matrix returns the kinetic basis") {
  const auto H = kinetic_only(2);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const auto hfp = orbitals::hfplus_basis(H, hf.basis);
  const auto kin = orbitals::kinetic_basis(H);
  CHECK((hfp.C - kin.C).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("hfplus doubles off-diagonal couplings") {
  // 2x2 M = [[a,b],[b,c]] -> M' = [[a,2b],[2b,c]], checked through the
  // eigenvalues of M'.
  const auto H = chain(2);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const auto kin = orbitals::kinetic_basis(H);
  const auto mix = orbitals::build_mix_matrix(kin, hf.basis);
  Eigen::MatrixXd Mp = 2.0 * mix.M;
  Mp.diagonal() = mix.M.diagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mp);
  const auto hfp = orbitals::hfplus_basis(H, hf.basis);
  Eigen::VectorXd e = es.eigenvalues();
  std::sort(e.begin(), e.end());
  CHECK((e - hfp.energies).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((hfp.C.transpose() * hfp.C -
         Eigen::MatrixXd::Identity(H.n_orb, H.n_orb))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("L=4 mix matrix off-diagonals are subdominant (soft)") {
  const auto H = chain(4);
  const auto hf = orbitals::solve_hf(H, 6, 6);
  const auto kin = orbitals::kinetic_basis(H);
  const auto mix = orbitals::build_mix_matrix(kin, hf.basis);
  int violations = 0;
  for (int a = 0; a < mix.M.rows(); ++a)
    for (int b = 0; b < a; ++b)
      if (std::abs(mix.M(a, b)) >= std::abs(mix.M(a, a) - mix.M(b, b)))
        ++violations;
  if (violations > 0)
    MESSAGE("mix-matrix dominance violated on ", violations, " pairs");
  WARN(violations == 0);
}

TEST_CASE("t2 amplitudes") {
  SUBCASE("zero without interactions") {
    const auto H = kinetic_only(2);
    const auto kin = orbitals::kinetic_basis(H);
    const auto t2 = orbitals::compute_t2(H, kin, 3);
    for (double v : t2.data()) CHECK(v == 0.0);
  }
  SUBCASE("two-orbital closed form") {
    Hamiltonian H;
    H.n_orb = 2;
    H.h = Eigen::Vector2d(-1.0, 1.0).asDiagonal();
    H.V = model::TwoBodyTensor(2);
    H.V(0, 0, 1, 1) = 0.3;
    H.V.symmetrize8();
    const auto kin = orbitals::kinetic_basis(H);
    const auto t2 = orbitals::compute_t2(H, kin, 1);
    const auto Hmo = model::rotate_integrals(H, kin.C);
    CHECK(t2(0, 0, 0, 0) ==
          doctest::Approx(Hmo.V(0, 0, 1, 1) / (2.0 * kin.energies[0] -
                                               2.0 * kin.energies[1])));
  }
  SUBCASE("permutation consistency") {
    const auto H = chain(2);
    const auto hf = orbitals::solve_hf(H, 3, 3);
    const auto t2 = orbitals::compute_t2(H, hf.basis, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 1; ++a)
          for (int b = 0; b < 1; ++b)
            CHECK(t2(i, j, a, b) ==
                  doctest::Approx(t2(j, i, b, a)).epsilon(1e-12));
  }
  SUBCASE("degenerate gap rejected") {
    Hamiltonian H;
    H.n_orb = 2;
    H.h = Eigen::Vector2d(1.0, 1.0).asDiagonal();
    H.V = model::TwoBodyTensor(2);
    const auto kin = orbitals::kinetic_basis(H);
    CHECK_THROWS_AS(orbitals::compute_t2(H, kin, 1), std::runtime_error);
  }
}

TEST_CASE("MP2 correlation energy tracks the exact correlation energy") {
  // MP2 consistently overshoots on these chains, so the check is a negative
  // sign plus a ratio window at weakened coupling rather than the naive
  // variational-style bracket.
  model::SurrogateParams sp;
  sp.U_d *= 0.1;
  sp.U_p *= 0.1;
  sp.U_pd *= 0.1;
  sp.x_offdiag *= 0.1;
  const auto spec = ChainSpec::with_default_filling(2);
  const auto H = model::extend_to_chain(model::surrogate_dimer(sp), spec);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const auto t2 = orbitals::compute_t2(H, hf.basis, 3);
  const double mp2 = orbitals::mp2_correlation_energy(H, hf.basis, t2);
  const double corr = sci::fci_ground_state(H, spec).energy - hf.energy;
  CHECK(mp2 < 0.0);
  CHECK(mp2 / corr > 0.8);
  CHECK(mp2 / corr < 1.25);
}

TEST_CASE("t2 JSON round trip") {
  const auto H = chain(2);
  const auto hf = orbitals::solve_hf(H, 3, 3);
  const auto t2 = orbitals::compute_t2(H, hf.basis, 3);
  const auto t2b = orbitals::t2_from_json(orbitals::to_json(t2));
  CHECK(t2b.n_occ() == t2.n_occ());
  CHECK(t2b.n_virt() == t2.n_virt());
  for (std::size_t i = 0; i < t2.data().size(); ++i)
    CHECK(t2b.data()[i] == t2.data()[i]);
  CHECK_THROWS(orbitals::t2_from_json("{\"shape\":[1,2,1,1],\"data\":[0,0]}"));
}

TEST_CASE("bases are mutually unitary") {
  const auto H = chain(4);
  const auto hf = orbitals::solve_hf(H, 6, 6);
  const auto kin = orbitals::kinetic_basis(H);
  const auto hfp = orbitals::hfplus_basis(H, hf.basis);
  for (const auto* b : {&hf.basis, &kin, &hfp}) {
    CHECK((b->C.transpose() * b->C -
           Eigen::MatrixXd::Identity(H.n_orb, H.n_orb))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
  const Eigen::MatrixXd R = hf.basis.C.transpose() * hfp.C;
  CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(H.n_orb, H.n_orb))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}
