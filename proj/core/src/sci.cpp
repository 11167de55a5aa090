#include "sqdlab/sci.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sqdlab::sci {

using model::TwoBodyTensor;

DeterminantBasis::DeterminantBasis(std::vector<Determinant> dets) {
  std::sort(dets.begin(), dets.end());
  dets.erase(std::unique(dets.begin(), dets.end()), dets.end());
  dets_ = std::move(dets);
  if (!dets_.empty()) {
    n_up_ = dets_.front().n_alpha();
    n_down_ = dets_.front().n_beta();
    for (const auto& d : dets_)
      if (d.n_alpha() != n_up_ || d.n_beta() != n_down_)
        throw std::invalid_argument(
            "DeterminantBasis: members belong to different sectors");
  }
  index_.reserve(dets_.size() * 2);
  for (std::size_t i = 0; i < dets_.size(); ++i)
    index_.emplace(dets_[i].key(), int(i));
}

DeterminantBasis DeterminantBasis::full_sector(int n_orb, int n_up, int n_down) {
  std::vector<Determinant> dets;
  std::vector<std::uint32_t> alphas, betas;
  for (std::uint32_t m = 0; m < (1u << n_orb); ++m) {
    const int pc = std::popcount(m);
    if (pc == n_up) alphas.push_back(m);
    if (pc == n_down) betas.push_back(m);
  }
  dets.reserve(alphas.size() * betas.size());
  for (auto a : alphas)
    for (auto b : betas) dets.push_back({a, b});
  return DeterminantBasis(std::move(dets));
}

int DeterminantBasis::index_of(const Determinant& d) const {
  const auto it = index_.find(d.key());
  return it == index_.end() ? -1 : it->second;
}

std::string DeterminantBasis::to_text() const {
  std::ostringstream os;
  for (const auto& d : dets_) {
    os << std::hex << d.alpha << "," << d.beta << "\n";
  }
  return os.str();
}

DeterminantBasis DeterminantBasis::from_text(const std::string& text) {
  std::vector<Determinant> dets;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("DeterminantBasis::from_text: malformed line");
    Determinant d;
    d.alpha = std::uint32_t(std::stoul(line.substr(0, comma), nullptr, 16));
    d.beta = std::uint32_t(std::stoul(line.substr(comma + 1), nullptr, 16));
    dets.push_back(d);
  }
  return DeterminantBasis(std::move(dets));
}

namespace {

// Sign of moving an electron from `from` to `to` in string s (s has `from`
// occupied and `to` empty): parity of occupied bits strictly between them.
int excitation_sign(std::uint32_t s, int from, int to) {
  const int lo = std::min(from, to), hi = std::max(from, to);
  const std::uint32_t between = ((1u << hi) - 1) & ~((1u << (lo + 1)) - 1);
  return (std::popcount(s & between) & 1) ? -1 : 1;
}

void occupied_list(std::uint32_t s, std::vector<int>& out) {
  out.clear();
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
}

} // namespace

double slater_condon(const Determinant& di, const Determinant& dj,
                     const Hamiltonian& H) {
  const TwoBodyTensor& V = H.V;
  const std::uint32_t xa = di.alpha ^ dj.alpha;
  const std::uint32_t xb = di.beta ^ dj.beta;
  const int ea = std::popcount(xa) / 2;
  const int eb = std::popcount(xb) / 2;
  if (ea + eb > 2) return 0.0;
  if (std::popcount(di.alpha) != std::popcount(dj.alpha) ||
      std::popcount(di.beta) != std::popcount(dj.beta))
    return 0.0; // different sectors

  static thread_local std::vector<int> occ_a, occ_b, holes, parts;

  if (ea == 0 && eb == 0) {
    occupied_list(di.alpha, occ_a);
    occupied_list(di.beta, occ_b);
    double e = H.e_core;
    for (int k : occ_a) e += H.h(k, k);
    for (int k : occ_b) e += H.h(k, k);
    for (int k : occ_a)
      for (int l : occ_a) e += 0.5 * (V.coulomb(k, l) - V.exchange(k, l));
    for (int k : occ_b)
      for (int l : occ_b) e += 0.5 * (V.coulomb(k, l) - V.exchange(k, l));
    for (int k : occ_a)
      for (int l : occ_b) e += V.coulomb(k, l);
    return e;
  }

  if (ea + eb == 1) {
    // Single excitation m -> p (m occupied in dj, p in di).
    const bool in_alpha = ea == 1;
    const std::uint32_t x = in_alpha ? xa : xb;
    const std::uint32_t si = in_alpha ? di.alpha : di.beta;
    const std::uint32_t sj = in_alpha ? dj.alpha : dj.beta;
    const int p = std::countr_zero(x & si);
    const int m = std::countr_zero(x & sj);
    const int sign = excitation_sign(sj, m, p);

    double e = H.h(p, m);
    occupied_list(dj.alpha, occ_a);
    occupied_list(dj.beta, occ_b);
    const auto& same = in_alpha ? occ_a : occ_b;
    const auto& other = in_alpha ? occ_b : occ_a;
    for (int k : same) {
      if (k == m) continue;
      e += V.phys(p, k, m, k) - V.phys(p, k, k, m);
    }
    for (int k : other) e += V.phys(p, k, m, k);
    return sign * e;
  }

  if (ea == 1 && eb == 1) {
    const int pa = std::countr_zero(xa & di.alpha);
    const int ma = std::countr_zero(xa & dj.alpha);
    const int pb = std::countr_zero(xb & di.beta);
    const int mb = std::countr_zero(xb & dj.beta);
    const int sign =
        excitation_sign(dj.alpha, ma, pa) * excitation_sign(dj.beta, mb, pb);
    return sign * V.phys(pa, pb, ma, mb);
  }

  // Same-spin double excitation (m < n) -> (p < q).
  const bool in_alpha = ea == 2;
  const std::uint32_t x = in_alpha ? xa : xb;
  const std::uint32_t si = in_alpha ? di.alpha : di.beta;
  const std::uint32_t sj = in_alpha ? dj.alpha : dj.beta;
  occupied_list(x & si, parts);
  occupied_list(x & sj, holes);
  const int m = holes[0], n = holes[1];
  const int p = parts[0], q = parts[1];
  const int sign1 = excitation_sign(sj, m, p);
  const std::uint32_t s1 = sj ^ (1u << m) ^ (1u << p);
  const int sign2 = excitation_sign(s1, n, q);
  return sign1 * sign2 * (V.phys(p, q, m, n) - V.phys(p, q, n, m));
}

// ---------------------------------------------------------------------------
// Projected Hamiltonian cache

SciMatrix::SciMatrix(const DeterminantBasis& basis, const Hamiltonian& H) {
  const std::size_t dim = basis.size();
  diag_.resize(dim);
  row_ptr_.assign(dim + 1, 0);

  std::vector<int> occ_a, occ_b, vir_a, vir_b;
  std::vector<std::pair<std::int32_t, double>> row;

  auto fill_lists = [&](const Determinant& d) {
    occ_a.clear(); vir_a.clear(); occ_b.clear(); vir_b.clear();
    const int n = H.n_orb;
    for (int o = 0; o < n; ++o) {
      (d.alpha >> o & 1) ? occ_a.push_back(o) : vir_a.push_back(o);
      (d.beta >> o & 1) ? occ_b.push_back(o) : vir_b.push_back(o);
    }
  };

  for (std::size_t i = 0; i < dim; ++i) {
    const Determinant di = basis[i];
    diag_[i] = slater_condon(di, di, H);
    fill_lists(di);
    row.clear();

    auto consider = [&](const Determinant& dj) {
      const int j = basis.index_of(dj);
      if (j < 0 || std::size_t(j) <= i) return;
      const double v = slater_condon(dj, di, H);
      if (v != 0.0) row.emplace_back(j, v);
    };

    // Alpha / beta singles.
    for (int m : occ_a)
      for (int p : vir_a)
        consider({di.alpha ^ (1u << m) ^ (1u << p), di.beta});
    for (int m : occ_b)
      for (int p : vir_b)
        consider({di.alpha, di.beta ^ (1u << m) ^ (1u << p)});
    // Same-spin doubles.
    for (std::size_t a = 0; a < occ_a.size(); ++a)
      for (std::size_t b = a + 1; b < occ_a.size(); ++b)
        for (std::size_t c = 0; c < vir_a.size(); ++c)
          for (std::size_t d = c + 1; d < vir_a.size(); ++d)
            consider({di.alpha ^ (1u << occ_a[a]) ^ (1u << occ_a[b]) ^
                          (1u << vir_a[c]) ^ (1u << vir_a[d]),
                      di.beta});
    for (std::size_t a = 0; a < occ_b.size(); ++a)
      for (std::size_t b = a + 1; b < occ_b.size(); ++b)
        for (std::size_t c = 0; c < vir_b.size(); ++c)
          for (std::size_t d = c + 1; d < vir_b.size(); ++d)
            consider({di.alpha,
                      di.beta ^ (1u << occ_b[a]) ^ (1u << occ_b[b]) ^
                          (1u << vir_b[c]) ^ (1u << vir_b[d])});
    // Opposite-spin doubles.
    for (int m : occ_a)
      for (int p : vir_a) {
        const std::uint32_t na = di.alpha ^ (1u << m) ^ (1u << p);
        for (int mm : occ_b)
          for (int pp : vir_b)
            consider({na, di.beta ^ (1u << mm) ^ (1u << pp)});
      }

    std::sort(row.begin(), row.end());
    row_ptr_[i + 1] = row_ptr_[i] + row.size();
    for (const auto& [j, v] : row) {
      cols_.push_back(j);
      vals_.push_back(v);
    }
  }
}

void SciMatrix::apply(const VectorXd& x, VectorXd& y) const {
  const std::size_t dim = diag_.size();
  y = diag_.cwiseProduct(x);
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    const double xi = x[i];
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto j = cols_[k];
      const double v = vals_[k];
      acc += v * x[j];
      y[j] += v * xi;
    }
    y[i] += acc;
  }
}

// ---------------------------------------------------------------------------
// Davidson

DavidsonResult davidson(
    const std::function<void(const VectorXd&, VectorXd&)>& apply,
    const VectorXd& diagonal, const DavidsonOptions& opts) {
  const int n = int(diagonal.size());
  if (n == 0) throw std::invalid_argument("davidson: empty problem");
  if (n == 1) {
    DavidsonResult r;
    r.eigenvalue = diagonal[0];
    r.eigenvector = VectorXd::Ones(1);
    return r;
  }

  std::vector<VectorXd> V, W;
  VectorXd guess = VectorXd::Zero(n);
  int start;
  diagonal.minCoeff(&start);
  guess[start] = 1.0;
  V.push_back(guess);

  std::mt19937_64 rng(12345);
  DavidsonResult result;
  VectorXd ritz, residual;

  for (int it = 1; it <= opts.max_iter; ++it) {
    while (W.size() < V.size()) {
      VectorXd w(n);
      apply(V[W.size()], w);
      W.push_back(std::move(w));
    }
    const int k = int(V.size());
    Eigen::MatrixXd S(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) S(a, b) = V[a].dot(W[b]);
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double theta = es.eigenvalues()[0];
    const VectorXd s = es.eigenvectors().col(0);

    ritz = VectorXd::Zero(n);
    VectorXd wr = VectorXd::Zero(n);
    for (int a = 0; a < k; ++a) {
      ritz += s[a] * V[a];
      wr += s[a] * W[a];
    }
    residual = wr - theta * ritz;
    const double res = residual.norm();
    result.eigenvalue = theta;
    result.eigenvector = ritz;
    result.iterations = it;
    result.residual = res;
    if (res < opts.tol * std::max(1.0, std::abs(theta))) {
      // Deterministic overall sign.
      int imax;
      result.eigenvector.cwiseAbs().maxCoeff(&imax);
      if (result.eigenvector[imax] < 0) result.eigenvector *= -1.0;
      result.eigenvector.normalize();
      return result;
    }

    if (k >= opts.restart) {
      V.clear();
      W.clear();
      V.push_back(ritz.normalized());
      continue;
    }

    VectorXd t(n);
    for (int i = 0; i < n; ++i) {
      double d = diagonal[i] - theta;
      if (std::abs(d) < 1e-8) d = (d < 0 ? -1e-8 : 1e-8);
      t[i] = residual[i] / d;
    }
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : V) t -= v.dot(t) * v;
    if (t.norm() < 1e-12) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int i = 0; i < n; ++i) t[i] = u(rng);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& v : V) t -= v.dot(t) * v;
    }
    V.push_back(t.normalized());
  }
  std::ostringstream msg;
  msg << "davidson: not converged after " << opts.max_iter
      << " iterations (residual " << result.residual << ")";
  throw std::runtime_error(msg.str());
}

// ---------------------------------------------------------------------------

GroundState diagonalize(const DeterminantBasis& basis, const Hamiltonian& H,
                        const DavidsonOptions& opts) {
  if (basis.empty()) throw std::invalid_argument("diagonalize: empty basis");
  const std::size_t dim = basis.size();
  GroundState g;
  g.basis = basis;

  if (dim < std::size_t(opts.dense_cutoff)) {
    Eigen::MatrixXd M(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i; j < dim; ++j)
        M(i, j) = M(j, i) = slater_condon(basis[i], basis[j], H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    g.energy = es.eigenvalues()[0];
    g.vector = es.eigenvectors().col(0);
    int imax;
    g.vector.cwiseAbs().maxCoeff(&imax);
    if (g.vector[imax] < 0) g.vector *= -1.0;
    return g;
  }

  const SciMatrix mat(basis, H);
  const auto res = davidson(
      [&mat](const VectorXd& x, VectorXd& y) { mat.apply(x, y); },
      mat.diagonal(), opts);
  g.energy = res.eigenvalue;
  g.vector = res.eigenvector;
  return g;
}

GroundState fci_ground_state(const Hamiltonian& H, const ChainSpec& spec,
                             const FciGuard& guard, const DavidsonOptions& opts) {
  const int n = H.n_orb;
  auto choose = [](int nn, int kk) {
    double r = 1.0;
    for (int i = 1; i <= kk; ++i) r = r * (nn - kk + i) / i;
    return r;
  };
  const double dim = choose(n, spec.n_up) * choose(n, spec.n_down);
  if (dim > double(guard.max_dimension)) {
    std::ostringstream msg;
    msg << "fci_ground_state: sector dimension " << std::int64_t(dim)
        << " exceeds guard " << guard.max_dimension;
    throw std::runtime_error(msg.str());
  }
  return diagonalize(DeterminantBasis::full_sector(n, spec.n_up, spec.n_down), H,
                     opts);
}

double missing_fraction(const GroundState& g, const DeterminantBasis& basis) {
  double covered = 0.0;
  for (const auto& d : basis.dets()) {
    const int i = g.basis.index_of(d);
    if (i < 0)
      throw std::invalid_argument(
          "missing_fraction: basis determinant outside the ground-state sector");
    covered += g.vector[i] * g.vector[i];
  }
  return std::clamp(1.0 - covered, 0.0, 1.0);
}

ExcitationProfile excitation_profile(const GroundState& g,
                                     const orbitals::OrbitalBasis& hf, int n_occ,
                                     const DeterminantBasis& basis) {
  if (n_occ > 0 && n_occ < hf.energies.size() &&
      std::abs(hf.energies[n_occ] - hf.energies[n_occ - 1]) < 1e-10)
    throw std::runtime_error(
        "excitation_profile: degenerate orbital energies at the Fermi level");
  const std::uint32_t above = ~((1u << n_occ) - 1);
  ExcitationProfile prof;
  for (std::size_t i = 0; i < g.basis.size(); ++i) {
    const Determinant d = g.basis[i];
    const int n_ex =
        std::popcount(d.alpha & above) + std::popcount(d.beta & above);
    if (std::size_t(n_ex) >= prof.total_weight.size()) {
      prof.total_weight.resize(n_ex + 1, 0.0);
      prof.covered_weight.resize(n_ex + 1, 0.0);
    }
    const double w = g.vector[i] * g.vector[i];
    prof.total_weight[n_ex] += w;
    if (basis.index_of(d) >= 0) prof.covered_weight[n_ex] += w;
  }
  return prof;
}

double energy_error(const DeterminantBasis& basis, const Hamiltonian& H,
                    const GroundState& reference_fci) {
  return diagonalize(basis, H).energy - reference_fci.energy;
}

double spin_squared(const GroundState& g, int n_orb) {
  // <S^2> = <S- S+> + Sz(Sz+1), computed by applying S+ = sum_p ad_pa a_pb.
  std::unordered_map<std::uint64_t, double> phi;
  for (std::size_t i = 0; i < g.basis.size(); ++i) {
    const Determinant d = g.basis[i];
    const double c = g.vector[i];
    if (c == 0.0) continue;
    for (int p = 0; p < n_orb; ++p) {
      if (!(d.beta >> p & 1) || (d.alpha >> p & 1)) continue;
      const std::uint32_t below = (1u << p) - 1;
      const int parity =
          std::popcount(d.alpha & below) + std::popcount(d.beta & below);
      const double sign = (parity & 1) ? -1.0 : 1.0;
      const Determinant nd{d.alpha | (1u << p), d.beta & ~(1u << p)};
      phi[nd.key()] += sign * c;
    }
  }
  double norm2 = 0.0;
  for (const auto& [k, v] : phi) norm2 += v * v;
  const double sz = 0.5 * (g.basis.n_up() - g.basis.n_down());
  return norm2 + sz * (sz + 1.0);
}

VectorXd orbital_occupations(const GroundState& g, int n_orb) {
  VectorXd occ = VectorXd::Zero(n_orb);
  for (std::size_t i = 0; i < g.basis.size(); ++i) {
    const Determinant d = g.basis[i];
    const double w = g.vector[i] * g.vector[i];
    for (int p = 0; p < n_orb; ++p)
      occ[p] += w * ((d.alpha >> p & 1) + (d.beta >> p & 1));
  }
  return occ;
}

} // namespace sqdlab::sci
