#include "sqdlab/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sqdlab::qsim {

using std::complex;
using ucj::Gate;
using ucj::GateKind;

std::vector<std::uint32_t> enumerate_strings(int n_orb, int n_elec) {
  if (n_orb < 0 || n_orb > 16)
    throw std::invalid_argument("enumerate_strings: n_orb out of range");
  std::vector<std::uint32_t> out;
  for (std::uint32_t m = 0; m < (1u << n_orb); ++m)
    if (std::popcount(m) == n_elec) out.push_back(m);
  return out;
}

Determinant SectorState::determinant(std::size_t flat_index) const {
  const std::size_t nb = beta_strings.size();
  return {alpha_strings[flat_index / nb], beta_strings[flat_index % nb]};
}

double SectorState::norm() const {
  double ss = 0.0;
  for (const auto& a : amps) ss += std::norm(a);
  return std::sqrt(ss);
}

namespace {

complex<double> phase_factor(double angle) {
  return {std::cos(angle), std::sin(angle)};
}

// 2x2 number-conserving block of XXPlusYY on (q1-occupied, q2-occupied).
struct MixCoeffs {
  complex<double> aa, ab, ba, bb;
};

MixCoeffs xxpyy_block(double theta, double beta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const complex<double> eb = phase_factor(beta);
  return {c, -std::conj(eb) * s, eb * s, c};
}

} // namespace

SectorState simulate_sector(const Circuit& c, int n_up, int n_down) {
  const int n = c.n_orb;
  if (n < 1 || n > 16)
    throw std::invalid_argument("simulate_sector: n_orb out of range");

  // X-preparation prefix defines the reference determinant.
  Determinant ref;
  std::size_t g0 = 0;
  while (g0 < c.gates.size() && c.gates[g0].kind == GateKind::X) {
    const int q = c.gates[g0].q1;
    if (q < n)
      ref.alpha |= 1u << q;
    else
      ref.beta |= 1u << (q - n);
    ++g0;
  }
  if (ref.n_alpha() != n_up || ref.n_beta() != n_down)
    throw std::invalid_argument(
        "simulate_sector: X-preparation inconsistent with (n_up, n_down)");

  SectorState st;
  st.n_orb = n;
  st.n_up = n_up;
  st.n_down = n_down;
  st.alpha_strings = enumerate_strings(n, n_up);
  st.beta_strings = enumerate_strings(n, n_down);
  const std::size_t na = st.alpha_strings.size();
  const std::size_t nb = st.beta_strings.size();
  st.amps.assign(na * nb, {0.0, 0.0});

  std::vector<int> arank(std::size_t(1) << n, -1), brank(std::size_t(1) << n, -1);
  for (std::size_t i = 0; i < na; ++i) arank[st.alpha_strings[i]] = int(i);
  for (std::size_t i = 0; i < nb; ++i) brank[st.beta_strings[i]] = int(i);
  st.amps[std::size_t(arank[ref.alpha]) * nb + brank[ref.beta]] = 1.0;

  for (std::size_t gi = g0; gi < c.gates.size(); ++gi) {
    const Gate& g = c.gates[gi];
    switch (g.kind) {
      case GateKind::X: {
        std::ostringstream msg;
        msg << "simulate_sector: non-conserving X gate at index " << gi;
        throw std::invalid_argument(msg.str());
      }
      case GateKind::Phase: {
        const complex<double> ph = phase_factor(g.theta);
        if (g.q1 < n) {
          for (std::size_t ia = 0; ia < na; ++ia)
            if (st.alpha_strings[ia] >> g.q1 & 1)
              for (std::size_t ib = 0; ib < nb; ++ib) st.amps[ia * nb + ib] *= ph;
        } else {
          const int q = g.q1 - n;
          for (std::size_t ib = 0; ib < nb; ++ib)
            if (st.beta_strings[ib] >> q & 1)
              for (std::size_t ia = 0; ia < na; ++ia) st.amps[ia * nb + ib] *= ph;
        }
        break;
      }
      case GateKind::CPhase: {
        const complex<double> ph = phase_factor(g.theta);
        const bool r1 = g.q1 >= n, r2 = g.q2 >= n;
        if (!r1 && !r2) {
          const std::uint32_t mask = (1u << g.q1) | (1u << g.q2);
          for (std::size_t ia = 0; ia < na; ++ia)
            if ((st.alpha_strings[ia] & mask) == mask)
              for (std::size_t ib = 0; ib < nb; ++ib) st.amps[ia * nb + ib] *= ph;
        } else if (r1 && r2) {
          const std::uint32_t mask = (1u << (g.q1 - n)) | (1u << (g.q2 - n));
          for (std::size_t ib = 0; ib < nb; ++ib)
            if ((st.beta_strings[ib] & mask) == mask)
              for (std::size_t ia = 0; ia < na; ++ia) st.amps[ia * nb + ib] *= ph;
        } else {
          const int qa = r1 ? g.q2 : g.q1;
          const int qb = (r1 ? g.q1 : g.q2) - n;
          for (std::size_t ia = 0; ia < na; ++ia) {
            if (!(st.alpha_strings[ia] >> qa & 1)) continue;
            for (std::size_t ib = 0; ib < nb; ++ib)
              if (st.beta_strings[ib] >> qb & 1) st.amps[ia * nb + ib] *= ph;
          }
        }
        break;
      }
      case GateKind::XXPlusYY: {
        const bool r1 = g.q1 >= n, r2 = g.q2 >= n;
        if (r1 != r2) {
          std::ostringstream msg;
          msg << "simulate_sector: XXPlusYY across spin registers at index " << gi;
          throw std::invalid_argument(msg.str());
        }
        const MixCoeffs m = xxpyy_block(g.theta, g.beta);
        const int a = r1 ? g.q1 - n : g.q1;
        const int b = r1 ? g.q2 - n : g.q2;
        const auto& strings = r1 ? st.beta_strings : st.alpha_strings;
        const auto& rank = r1 ? brank : arank;
        for (std::size_t i = 0; i < strings.size(); ++i) {
          const std::uint32_t s = strings[i];
          if (!(s >> a & 1) || (s >> b & 1)) continue; // want n_a=1, n_b=0
          const std::uint32_t t = s ^ (1u << a) ^ (1u << b);
          const std::size_t j = std::size_t(rank[t]);
          if (!r1) {
            for (std::size_t ib = 0; ib < nb; ++ib) {
              auto& x = st.amps[i * nb + ib];
              auto& y = st.amps[j * nb + ib];
              const auto x0 = x, y0 = y;
              x = m.aa * x0 + m.ab * y0;
              y = m.ba * x0 + m.bb * y0;
            }
          } else {
            for (std::size_t ia = 0; ia < na; ++ia) {
              auto& x = st.amps[ia * nb + i];
              auto& y = st.amps[ia * nb + j];
              const auto x0 = x, y0 = y;
              x = m.aa * x0 + m.ab * y0;
              y = m.ba * x0 + m.bb * y0;
            }
          }
        }
        break;
      }
    }
  }
  return st;
}

std::vector<complex<double>> simulate_full(const Circuit& c,
                                           bool override_size_guard) {
  const int nq = c.n_qubits();
  if (nq > 16 && !override_size_guard)
    throw std::invalid_argument(
        "simulate_full: " + std::to_string(nq) +
        " qubits exceeds the 16-qubit guard (pass override_size_guard=true)");
  std::vector<complex<double>> psi(std::size_t(1) << nq, {0.0, 0.0});
  psi[0] = 1.0;
  const std::size_t dim = psi.size();

  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::X: {
        const std::uint32_t mask = 1u << g.q1;
        for (std::size_t i = 0; i < dim; ++i)
          if (!(i & mask)) std::swap(psi[i], psi[i | mask]);
        break;
      }
      case GateKind::Phase: {
        const complex<double> ph = phase_factor(g.theta);
        const std::uint32_t mask = 1u << g.q1;
        for (std::size_t i = 0; i < dim; ++i)
          if (i & mask) psi[i] *= ph;
        break;
      }
      case GateKind::CPhase: {
        const complex<double> ph = phase_factor(g.theta);
        const std::uint32_t mask = (1u << g.q1) | (1u << g.q2);
        for (std::size_t i = 0; i < dim; ++i)
          if ((i & mask) == mask) psi[i] *= ph;
        break;
      }
      case GateKind::XXPlusYY: {
        const MixCoeffs m = xxpyy_block(g.theta, g.beta);
        const std::uint32_t m1 = 1u << g.q1;
        const std::uint32_t m2 = 1u << g.q2;
        for (std::size_t i = 0; i < dim; ++i) {
          if (!(i & m1) || (i & m2)) continue; // q1 set, q2 clear
          const std::size_t j = i ^ m1 ^ m2;
          const auto x0 = psi[i], y0 = psi[j];
          psi[i] = m.aa * x0 + m.ab * y0;
          psi[j] = m.ba * x0 + m.bb * y0;
        }
        break;
      }
    }
  }
  return psi;
}

SampleSet sample(const SectorState& state, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample: shots must be >= 1");
  std::mt19937_64 rng(seed);
  SampleSet out;
  out.n_orb = state.n_orb;
  out.origin = SampleOrigin::Simulated;
  out.total_shots = shots;

  const std::size_t dim = state.amps.size();
  std::vector<double> probs(dim);
  double total = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    probs[i] = std::norm(state.amps[i]);
    total += probs[i];
  }
  // Sequential conditional binomials == one multinomial draw.
  std::int64_t remaining = shots;
  double rest = total;
  for (std::size_t i = 0; i < dim && remaining > 0; ++i) {
    if (probs[i] <= 0.0) continue;
    std::int64_t k;
    if (probs[i] >= rest) {
      k = remaining;
    } else {
      std::binomial_distribution<std::int64_t> bin(remaining, probs[i] / rest);
      k = bin(rng);
    }
    if (k > 0) out.counts[state.determinant(i).bits(state.n_orb)] += k;
    remaining -= k;
    rest -= probs[i];
  }
  return out;
}

SampleSet apply_bitflip_noise(const SampleSet& s, double p_flip,
                              std::uint64_t seed) {
  if (p_flip < 0.0 || p_flip > 1.0)
    throw std::invalid_argument("apply_bitflip_noise: p_flip out of [0,1]");
  SampleSet out;
  out.n_orb = s.n_orb;
  out.total_shots = s.total_shots;
  out.origin = SampleOrigin::Noisy;
  const int n_bits = 2 * s.n_orb;
  if (p_flip == 0.0) {
    out.counts = s.counts;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(p_flip);
  for (const auto& [bits, count] : s.counts) {
    for (std::int64_t shot = 0; shot < count; ++shot) {
      std::uint32_t b = bits;
      for (int q = 0; q < n_bits; ++q)
        if (flip(rng)) b ^= 1u << q;
      ++out.counts[b];
    }
  }
  return out;
}

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double register_keep_probability(int m, int k, double p) {
  double acc = 0.0;
  const int jmax = std::min(k, m - k);
  for (int j = 0; j <= jmax; ++j)
    acc += binom(k, j) * binom(m - k, j) * std::pow(p, 2 * j) *
           std::pow(1.0 - p, m - 2 * j);
  return acc;
}

} // namespace

double correct_number_probability(int n_orb, int n_up, int n_down, double p_flip) {
  return register_keep_probability(n_orb, n_up, p_flip) *
         register_keep_probability(n_orb, n_down, p_flip);
}

double calibrate_bitflip(int n_orb, int n_up, int n_down, double target_fraction) {
  if (target_fraction <= 0.0 || target_fraction > 1.0)
    throw std::invalid_argument("calibrate_bitflip: target out of (0,1]");
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (correct_number_probability(n_orb, n_up, n_down, mid) > target_fraction)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double expected_unique(const std::vector<double>& probs, double shots) {
  double sum_p = 0.0;
  double acc = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("expected_unique: negative probability");
    sum_p += p;
    if (p > 0.0) acc += 1.0 - std::exp(shots * std::log1p(-std::min(p, 1.0)));
  }
  if (sum_p > 1.0 + 1e-9)
    throw std::invalid_argument("expected_unique: probabilities sum beyond 1");
  return acc;
}

double expected_missing_fraction(const std::vector<double>& weights,
                                 const std::vector<double>& probs, double shots) {
  if (weights.size() != probs.size())
    throw std::invalid_argument("expected_missing_fraction: size mismatch");
  double sum_w = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    const double p = std::min(probs[i], 1.0);
    if (w < 0.0 || p < 0.0)
      throw std::invalid_argument("expected_missing_fraction: negative entry");
    sum_w += w;
    if (p >= 1.0)
      acc += (shots == 0.0) ? w : 0.0;
    else
      acc += w * std::exp(shots * std::log1p(-p));
  }
  if (sum_w > 1.0 + 1e-9)
    throw std::invalid_argument("expected_missing_fraction: weights sum beyond 1");
  return acc;
}

std::string to_csv(const SampleSet& s) {
  std::ostringstream os;
  os << "bitstring,count\n";
  const int width = 2 * s.n_orb;
  for (const auto& [bits, count] : s.counts) {
    for (int q = width - 1; q >= 0; --q) os << ((bits >> q) & 1);
    os << "," << count << "\n";
  }
  return os.str();
}

SampleSet sample_set_from_csv(const std::string& text) {
  SampleSet s;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "bitstring,count")
    throw std::invalid_argument("sample_set_from_csv: missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("sample_set_from_csv: malformed line");
    const std::string bstr = line.substr(0, comma);
    if (s.n_orb == 0) s.n_orb = int(bstr.size()) / 2;
    if (bstr.size() != std::size_t(2 * s.n_orb))
      throw std::invalid_argument("sample_set_from_csv: inconsistent width");
    std::uint32_t bits = 0;
    for (char ch : bstr) {
      bits <<= 1;
      if (ch == '1')
        bits |= 1;
      else if (ch != '0')
        throw std::invalid_argument("sample_set_from_csv: bad bitstring");
    }
    const std::int64_t count = std::stoll(line.substr(comma + 1));
    s.counts[bits] += count;
    s.total_shots += count;
  }
  s.origin = SampleOrigin::External;
  return s;
}

} // namespace sqdlab::qsim
