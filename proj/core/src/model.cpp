#include "sqdlab/model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqdlab::model {

using nlohmann::json;

namespace {

// Index tuples equivalent to (p,q,r,s) for real orbitals (8-fold group).
std::array<std::array<int, 4>, 8> symmetry_orbit(int p, int q, int r, int s) {
  return {{{p, q, r, s},
           {s, q, r, p},
           {p, r, q, s},
           {s, r, q, p},
           {q, p, s, r},
           {r, p, s, q},
           {q, s, p, r},
           {r, s, p, q}}};
}

} // namespace

void TwoBodyTensor::symmetrize8() {
  TwoBodyTensor out(n_);
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          double acc = 0.0;
          for (const auto& t : symmetry_orbit(p, q, r, s))
            acc += (*this)(t[0], t[1], t[2], t[3]);
          out(p, q, r, s) = acc / 8.0;
        }
  data_ = std::move(out.data_);
}

double TwoBodyTensor::max_asymmetry() const {
  double worst = 0.0;
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          const double v = (*this)(p, q, r, s);
          for (const auto& t : symmetry_orbit(p, q, r, s))
            worst = std::max(worst, std::abs(v - (*this)(t[0], t[1], t[2], t[3])));
        }
  return worst;
}

double TwoBodyTensor::density_density_residual() const {
  double worst = 0.0;
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) {
          if (r == q && s == p) continue;
          worst = std::max(worst, std::abs((*this)(p, q, r, s)));
        }
  return worst;
}

void ChainSpec::validate() const {
  if (L < 1) throw std::invalid_argument("ChainSpec: L must be positive");
  if (n_up < 0 || n_up > n_orb() || n_down < 0 || n_down > n_orb())
    throw std::invalid_argument("ChainSpec: electron counts out of range");
  if (!(screening_factor > 0.0 && screening_factor <= 1.0))
    throw std::invalid_argument("ChainSpec: screening_factor must be in (0, 1]");
  if (!(kinetic_scale > 0.0 && kinetic_scale <= 1.0))
    throw std::invalid_argument("ChainSpec: kinetic_scale must be in (0, 1]");
}

ChainSpec ChainSpec::with_default_filling(int L) {
  if (L % 2 != 0)
    throw std::invalid_argument(
        "default filling 3L/2 requires even L; set electron counts explicitly");
  ChainSpec s;
  s.L = L;
  s.n_up = s.n_down = 3 * L / 2;
  return s;
}

DimerModel surrogate_dimer(const SurrogateParams& params) {
  const double vals[] = {params.eps_d, params.eps_p, params.t_pd,  params.U_d,
                         params.U_p,   params.U_pd,  params.x_offdiag};
  for (double v : vals)
    if (!std::isfinite(v))
      throw std::invalid_argument("surrogate_dimer: non-finite parameter");
  if (params.x_offdiag == 0.0)
    throw std::invalid_argument(
        "surrogate_dimer: x_offdiag must be nonzero (V2 would be density-density)");

  DimerModel dimer;
  dimer.h2 = MatrixXd::Zero(4, 4);
  // Orbitals: 0 = d1, 1 = p1, 2 = d2, 3 = p2.
  dimer.h2(0, 0) = dimer.h2(2, 2) = params.eps_d;
  dimer.h2(1, 1) = dimer.h2(3, 3) = params.eps_p;
  for (int i = 0; i < 3; ++i)
    dimer.h2(i, i + 1) = dimer.h2(i + 1, i) = -params.t_pd;

  dimer.V2 = TwoBodyTensor(4);
  auto& V = dimer.V2;
  for (int d : {0, 2}) V(d, d, d, d) = params.U_d;
  for (int p : {1, 3}) V(p, p, p, p) = params.U_p;
  for (int a : {0, 1, 2}) {
    const int b = a + 1; // Cu-O nearest neighbors
    V(a, b, b, a) = V(b, a, a, b) = params.U_pd;
    // Exchange integral K = (ab|ba); its symmetry orbit also carries (ab|ab).
    V(a, b, a, b) = V(b, a, b, a) = params.x_offdiag;
    V(a, a, b, b) = V(b, b, a, a) = params.x_offdiag;
  }
  V.symmetrize8();
  dimer.provenance = DimerProvenance::Surrogate;
  return dimer;
}

Hamiltonian extend_to_chain(const DimerModel& dimer, const ChainSpec& spec) {
  spec.validate();
  if (spec.L < 2) throw std::invalid_argument("extend_to_chain: L must be >= 2");
  const int n = spec.n_orb();
  const int n_place = spec.L - 1; // dimer placement j covers orbitals [2j, 2j+3]

  Hamiltonian H;
  H.n_orb = n;
  H.spec = spec;
  H.e_core = 0.0;
  H.h = MatrixXd::Zero(n, n);
  H.V = TwoBodyTensor(n);

  auto in_window = [](int orb, int j) { return orb >= 2 * j && orb <= 2 * j + 3; };

  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      int cover = 0;
      for (int j = 0; j < n_place; ++j) {
        if (!in_window(i, j) || !in_window(k, j)) continue;
        acc += dimer.h2(i - 2 * j, k - 2 * j);
        ++cover;
      }
      if (cover > 0) H.h(i, k) = spec.kinetic_scale * acc / cover;
    }

  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          double acc = 0.0;
          int cover = 0;
          for (int j = 0; j < n_place; ++j) {
            if (!in_window(p, j) || !in_window(q, j) || !in_window(r, j) ||
                !in_window(s, j))
              continue;
            acc += dimer.V2(p - 2 * j, q - 2 * j, r - 2 * j, s - 2 * j);
            ++cover;
          }
          if (cover == 0) continue;
          double v = acc / cover;
          // Screen entries whose index set spans two plaquettes.
          const int plaq_min = std::min({p, q, r, s}) / 2;
          const int plaq_max = std::max({p, q, r, s}) / 2;
          if (plaq_max != plaq_min) v *= spec.screening_factor;
          H.V(p, q, r, s) = v;
        }
  return H;
}

Hamiltonian rotate_integrals(const Hamiltonian& H, const MatrixXd& U) {
  const int n = H.n_orb;
  if (U.rows() != n || U.cols() != n)
    throw std::invalid_argument("rotate_integrals: dimension mismatch");
  if ((U.transpose() * U - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("rotate_integrals: U is not unitary");

  Hamiltonian out = H;
  out.h = U.transpose() * H.h * U;

  // Four sequential one-index transforms of V.
  auto transform_index = [n, &U](const TwoBodyTensor& src, int idx) {
    TwoBodyTensor dst(n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t) {
              switch (idx) {
                case 0: acc += U(t, p) * src(t, q, r, s); break;
                case 1: acc += U(t, q) * src(p, t, r, s); break;
                case 2: acc += U(t, r) * src(p, q, t, s); break;
                default: acc += U(t, s) * src(p, q, r, t); break;
              }
            }
            dst(p, q, r, s) = acc;
          }
    return dst;
  };
  TwoBodyTensor tmp = transform_index(H.V, 0);
  tmp = transform_index(tmp, 1);
  tmp = transform_index(tmp, 2);
  out.V = transform_index(tmp, 3);
  return out;
}

Hamiltonian zero_interplaquette_coulomb(const Hamiltonian& H) {
  Hamiltonian out = H;
  const int n = H.n_orb;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          const int lo = std::min({p, q, r, s}) / 2;
          const int hi = std::max({p, q, r, s}) / 2;
          if (hi != lo) out.V(p, q, r, s) = 0.0;
        }
  return out;
}

namespace {

json integrals_to_json(int n, const MatrixXd& h, const TwoBodyTensor& V,
                       double e_core) {
  json j;
  j["n_orb"] = n;
  std::vector<double> hflat(std::size_t(n) * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) hflat[std::size_t(i) * n + k] = h(i, k);
  j["h"] = hflat;
  j["V"] = V.data();
  j["e_core"] = e_core;
  j["units"] = "eV";
  return j;
}

void integrals_from_json(const json& j, int& n, MatrixXd& h, TwoBodyTensor& V,
                         double& e_core) {
  n = j.at("n_orb").get<int>();
  const auto hflat = j.at("h").get<std::vector<double>>();
  const auto vflat = j.at("V").get<std::vector<double>>();
  if (hflat.size() != std::size_t(n) * n ||
      vflat.size() != std::size_t(n) * n * n * n)
    throw std::invalid_argument("integrals JSON: array sizes inconsistent with n_orb");
  h = MatrixXd(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) h(i, k) = hflat[std::size_t(i) * n + k];
  V = TwoBodyTensor(n);
  V.data() = vflat;
  e_core = j.value("e_core", 0.0);
}

} // namespace

std::string to_json(const Hamiltonian& H) {
  json j = integrals_to_json(H.n_orb, H.h, H.V, H.e_core);
  j["spec"] = {{"L", H.spec.L},
               {"n_up", H.spec.n_up},
               {"n_down", H.spec.n_down},
               {"screening_factor", H.spec.screening_factor},
               {"kinetic_scale", H.spec.kinetic_scale}};
  return j.dump(2);
}

Hamiltonian hamiltonian_from_json(const std::string& text) {
  const json j = json::parse(text);
  Hamiltonian H;
  integrals_from_json(j, H.n_orb, H.h, H.V, H.e_core);
  if (j.contains("spec")) {
    const auto& s = j["spec"];
    H.spec.L = s.value("L", H.n_orb / 2);
    H.spec.n_up = s.value("n_up", 0);
    H.spec.n_down = s.value("n_down", 0);
    H.spec.screening_factor = s.value("screening_factor", 0.5);
    H.spec.kinetic_scale = s.value("kinetic_scale", 0.7);
  } else {
    H.spec.L = H.n_orb / 2;
  }
  return H;
}

std::string to_json(const DimerModel& dimer) {
  json j = integrals_to_json(4, dimer.h2, dimer.V2, 0.0);
  j["provenance"] =
      dimer.provenance == DimerProvenance::Surrogate ? "surrogate" : "file";
  return j.dump(2);
}

DimerModel dimer_from_json(const std::string& text) {
  const json j = json::parse(text);
  int n = 0;
  double e_core = 0.0;
  DimerModel dimer;
  integrals_from_json(j, n, dimer.h2, dimer.V2, e_core);
  if (n != 4) throw std::invalid_argument("dimer JSON: n_orb must be 4");
  dimer.provenance = DimerProvenance::File;
  return dimer;
}

} // namespace sqdlab::model
