#include "sqdlab/orbitals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqdlab::orbitals {

using nlohmann::json;

void fix_column_phases(MatrixXd& C) {
  for (int c = 0; c < C.cols(); ++c) {
    for (int r = 0; r < C.rows(); ++r) {
      if (std::abs(C(r, c)) > 1e-12) {
        if (C(r, c) < 0) C.col(c) *= -1.0;
        break;
      }
    }
  }
}

namespace {

// Stable energy ordering with a lexicographic tie-break for degenerate pairs.
void sort_basis(MatrixXd& C, VectorXd& e) {
  const int n = e.size();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(e[a] - e[b]) > 1e-10) return e[a] < e[b];
    for (int r = 0; r < C.rows(); ++r) {
      if (std::abs(C(r, a) - C(r, b)) > 1e-12) return C(r, a) < C(r, b);
    }
    return false;
  });
  MatrixXd C2(C.rows(), n);
  VectorXd e2(n);
  for (int i = 0; i < n; ++i) {
    C2.col(i) = C.col(order[i]);
    e2[i] = e[order[i]];
  }
  C = C2;
  e = e2;
}

MatrixXd fock_matrix(const Hamiltonian& H, const MatrixXd& D) {
  const int n = H.n_orb;
  MatrixXd F = H.h;
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int l = 0; l < n; ++l)
        for (int s = 0; s < n; ++s)
          acc += D(l, s) * (2.0 * H.V(m, s, l, k) - H.V(m, s, k, l));
      F(m, k) += acc;
    }
  return F;
}

} // namespace

HfResult solve_hf(const Hamiltonian& H, int n_up, int n_down,
                  const ScfOptions& opts) {
  if (n_up != n_down)
    throw std::invalid_argument("solve_hf: open-shell (n_up != n_down) unsupported");
  if (n_up <= 0 || n_up > H.n_orb)
    throw std::invalid_argument("solve_hf: electron count out of range");
  const int n = H.n_orb;
  const int nocc = n_up;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H.h);
  MatrixXd C = es.eigenvectors();
  MatrixXd D = C.leftCols(nocc) * C.leftCols(nocc).transpose();

  // Pulay DIIS over Fock matrices; plain damping alone settles into a
  // period-2 limit cycle on the charge-transfer chains.
  constexpr int kDiisDepth = 8;
  std::vector<MatrixXd> fock_hist, err_hist;

  double resid = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    MatrixXd F = fock_matrix(H, D);
    const MatrixXd err = F * D - D * F;
    resid = err.cwiseAbs().maxCoeff();
    if (resid >= opts.tol) {
      fock_hist.push_back(F);
      err_hist.push_back(err);
      if (int(fock_hist.size()) > kDiisDepth) {
        fock_hist.erase(fock_hist.begin());
        err_hist.erase(err_hist.begin());
      }
      const int m = int(fock_hist.size());
      if (m >= 2) {
        MatrixXd B = MatrixXd::Zero(m + 1, m + 1);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            B(i, j) = (err_hist[i].array() * err_hist[j].array()).sum();
        B.row(m).setConstant(-1.0);
        B.col(m).setConstant(-1.0);
        B(m, m) = 0.0;
        VectorXd rhs = VectorXd::Zero(m + 1);
        rhs[m] = -1.0;
        const VectorXd coef = B.fullPivLu().solve(rhs);
        if (coef.allFinite()) {
          F.setZero();
          for (int i = 0; i < m; ++i) F += coef[i] * fock_hist[i];
        }
      }
    }
    if (resid < opts.tol) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> fs(F);
      MatrixXd Cf = fs.eigenvectors();
      VectorXd ef = fs.eigenvalues();
      sort_basis(Cf, ef);
      fix_column_phases(Cf);
      HfResult out;
      out.basis.kind = BasisKind::HF;
      out.basis.C = Cf;
      out.basis.energies = ef;
      const MatrixXd Dc = Cf.leftCols(nocc) * Cf.leftCols(nocc).transpose();
      const MatrixXd Fc = fock_matrix(H, Dc);
      out.energy = (Dc.array() * (H.h + Fc).array()).sum() + H.e_core;
      out.iterations = it;
      return out;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> fs(F);
    const MatrixXd Cn = fs.eigenvectors();
    const MatrixXd Dn = Cn.leftCols(nocc) * Cn.leftCols(nocc).transpose();
    // Once DIIS has history, follow the extrapolated Fock exactly.
    if (int(fock_hist.size()) >= 2)
      D = Dn;
    else
      D = (1.0 - opts.mixing) * Dn + opts.mixing * D;
  }
  std::ostringstream msg;
  msg << "solve_hf: SCF not converged after " << opts.max_iter
      << " iterations (last commutator residual " << resid << ")";
  throw std::runtime_error(msg.str());
}

OrbitalBasis kinetic_basis(const Hamiltonian& H) {
  if ((H.h - H.h.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("kinetic_basis: h is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H.h);
  OrbitalBasis b;
  b.kind = BasisKind::KIN;
  b.C = es.eigenvectors();
  b.energies = es.eigenvalues();
  sort_basis(b.C, b.energies);
  fix_column_phases(b.C);
  return b;
}

MixMatrix build_mix_matrix(const OrbitalBasis& kin, const OrbitalBasis& hf) {
  if (kin.C.rows() != hf.C.rows() || kin.C.cols() != hf.C.cols())
    throw std::invalid_argument("build_mix_matrix: dimension mismatch");
  const MatrixXd W = kin.C.transpose() * hf.C; // kinetic-frame HF coefficients
  MixMatrix mix;
  mix.M = W * hf.energies.asDiagonal() * W.transpose();
  return mix;
}

OrbitalBasis hfplus_basis(const Hamiltonian& H, const OrbitalBasis& hf) {
  const OrbitalBasis kin = kinetic_basis(H);
  if (hf.C.rows() != kin.C.rows())
    throw std::invalid_argument("hfplus_basis: HF/kinetic dimension mismatch");
  const MixMatrix mix = build_mix_matrix(kin, hf);
  MatrixXd Mp = 2.0 * mix.M;
  Mp.diagonal() = mix.M.diagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Mp);
  OrbitalBasis b;
  b.kind = BasisKind::HFPLUS;
  MatrixXd W = es.eigenvectors();
  b.energies = es.eigenvalues();
  b.C = kin.C * W;
  sort_basis(b.C, b.energies);
  fix_column_phases(b.C);
  return b;
}

T2Amplitudes compute_t2(const Hamiltonian& H, const OrbitalBasis& basis,
                        int n_occ) {
  const int n = H.n_orb;
  if (n_occ <= 0 || n_occ >= n)
    throw std::invalid_argument("compute_t2: occupied/virtual split degenerate");
  const int nv = n - n_occ;
  const Hamiltonian Hmo = model::rotate_integrals(H, basis.C);
  T2Amplitudes t2(n_occ, nv);
  for (int i = 0; i < n_occ; ++i)
    for (int j = 0; j < n_occ; ++j)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const double denom = basis.energies[i] + basis.energies[j] -
                               basis.energies[n_occ + a] -
                               basis.energies[n_occ + b];
          if (std::abs(denom) < 1e-8) {
            std::ostringstream msg;
            msg << "compute_t2: vanishing denominator for orbitals (" << i
                << "," << j << "," << n_occ + a << "," << n_occ + b << ")";
            throw std::runtime_error(msg.str());
          }
          // <ij|ab> / (e_i + e_j - e_a - e_b)
          t2(i, j, a, b) = Hmo.V(i, j, n_occ + b, n_occ + a) / denom;
        }
  t2.source = T2Source::MP2;
  return t2;
}

double mp2_correlation_energy(const Hamiltonian& H, const OrbitalBasis& basis,
                              const T2Amplitudes& t2) {
  const int no = t2.n_occ();
  const int nv = t2.n_virt();
  const Hamiltonian Hmo = model::rotate_integrals(H, basis.C);
  double e2 = 0.0;
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const double vij_ab = Hmo.V(i, j, no + b, no + a); // <ij|ab>
          const double vij_ba = Hmo.V(i, j, no + a, no + b); // <ij|ba>
          e2 += t2(i, j, a, b) * (2.0 * vij_ab - vij_ba);
        }
  return e2;
}

std::string to_json(const T2Amplitudes& t2) {
  json j;
  j["shape"] = {t2.n_occ(), t2.n_occ(), t2.n_virt(), t2.n_virt()};
  j["data"] = t2.data();
  j["source"] = t2.source == T2Source::MP2 ? "MP2" : "CCSD";
  return j.dump(2);
}

T2Amplitudes t2_from_json(const std::string& text) {
  const json j = json::parse(text);
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 4 || shape[0] != shape[1] || shape[2] != shape[3])
    throw std::invalid_argument("t2 JSON: shape must be [no, no, nv, nv]");
  T2Amplitudes t2(shape[0], shape[2]);
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != t2.data().size())
    throw std::invalid_argument("t2 JSON: data size inconsistent with shape");
  t2.data() = data;
  t2.source = j.value("source", "MP2") == "CCSD" ? T2Source::FILE : T2Source::MP2;
  for (double v : t2.data())
    if (!std::isfinite(v)) throw std::invalid_argument("t2 JSON: non-finite entry");
  return t2;
}

} // namespace sqdlab::orbitals
