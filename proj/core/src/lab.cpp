#include "sqdlab/lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqdlab::lab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27; x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

Method method_from_string(const std::string& s) {
  if (s == "ideal") return Method::IdealSqd;
  if (s == "ucj") return Method::Ucj;
  if (s == "lucj") return Method::Lucj;
  throw std::invalid_argument("unknown method '" + s + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::IdealSqd: return "ideal";
    case Method::Ucj: return "ucj";
    default: return "lucj";
  }
}

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "hf") return BasisKind::HF;
  if (s == "kin") return BasisKind::KIN;
  if (s == "hf+") return BasisKind::HFPLUS;
  throw std::invalid_argument("unknown basis kind '" + s + "'");
}

std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::HF: return "hf";
    case BasisKind::KIN: return "kin";
    default: return "hf+";
  }
}

std::vector<double> ExperimentConfig::default_schedule() {
  std::vector<double> s;
  for (int k = 2; k <= 11; ++k) s.push_back(std::round(std::pow(10.0, 0.5 * k)));
  return s;
}

void ExperimentConfig::validate() const {
  chain.validate();
  if (r < 1) throw std::invalid_argument("r must be >= 1");
  if (master_shots < 1.0)
    throw std::invalid_argument("master_shots must be >= 1");
  if (batches < 0) throw std::invalid_argument("batches must be >= 0");
  if (chemical_accuracy <= 0.0)
    throw std::invalid_argument("chemical_accuracy must be positive");
  if (!std::is_sorted(shots_schedule.begin(), shots_schedule.end()))
    throw std::invalid_argument("shots_schedule must be ascending");
  for (double s : shots_schedule)
    if (s < 1.0) throw std::invalid_argument("shots values must be >= 1");
  if (noise) {
    if (noise->p_flip && noise->calibrate_target)
      throw std::invalid_argument("give p_flip or calibrate_target, not both");
    if (!noise->p_flip && !noise->calibrate_target)
      throw std::invalid_argument("noise needs p_flip or calibrate_target");
    if (noise->p_flip && (*noise->p_flip < 0.0 || *noise->p_flip > 0.5))
      throw std::invalid_argument("p_flip must lie in [0, 0.5]");
    if (noise->calibrate_target &&
        (*noise->calibrate_target <= 0.0 || *noise->calibrate_target >= 1.0))
      throw std::invalid_argument("calibrate_target must lie in (0, 1)");
  }
}

Hamiltonian build_chain(const ExperimentConfig& cfg) {
  if (cfg.integrals_file)
    return model::hamiltonian_from_json(read_file(*cfg.integrals_file));
  return model::extend_to_chain(model::surrogate_dimer(cfg.surrogate), cfg.chain);
}

orbitals::OrbitalBasis compute_basis(const Hamiltonian& H, BasisKind kind,
                                     int n_occ) {
  switch (kind) {
    case BasisKind::KIN: return orbitals::kinetic_basis(H);
    case BasisKind::HF: return orbitals::solve_hf(H, n_occ, n_occ).basis;
    default: {
      auto hf = orbitals::solve_hf(H, n_occ, n_occ);
      return orbitals::hfplus_basis(H, hf.basis);
    }
  }
}

ucj::Topology topology_by_name(const std::string& name, int n_orb) {
  if (name == "line") return ucj::Topology::line(n_orb);
  if (name == "complete" || name == "all-to-all")
    return ucj::Topology::complete(n_orb);
  throw std::invalid_argument("unknown topology '" + name + "'");
}

qsim::SectorState prepare_state(const ExperimentConfig& cfg,
                                const Hamiltonian& H_mo,
                                const Eigen::VectorXd& mo_energies,
                                const sci::GroundState& fci,
                                ucj::GateCensus* census_out) {
  const int n = H_mo.n_orb;
  const int n_up = cfg.chain.n_up, n_down = cfg.chain.n_down;
  if (census_out) *census_out = {};

  if (cfg.method == Method::IdealSqd) {
    qsim::SectorState state;
    state.n_orb = n;
    state.n_up = n_up;
    state.n_down = n_down;
    state.alpha_strings = qsim::enumerate_strings(n, n_up);
    state.beta_strings = qsim::enumerate_strings(n, n_down);
    state.amps.assign(state.dim(), 0.0);
    // full_sector orders (alpha, beta) with beta fastest, matching the
    // SectorState flat layout.
    if (fci.basis.size() != state.dim())
      throw std::invalid_argument("prepare_state: FCI basis is not the full sector");
    for (std::size_t i = 0; i < state.dim(); ++i)
      state.amps[i] = fci.vector[Eigen::Index(i)];
    return state;
  }

  // Circuit route: MP2 amplitudes in the already-rotated frame, so the
  // orbital basis is the identity with the molecular-orbital energies.
  orbitals::OrbitalBasis frame;
  frame.kind = cfg.basis_kind;
  frame.C = Eigen::MatrixXd::Identity(n, n);
  frame.energies = mo_energies;
  const auto t2 = orbitals::compute_t2(H_mo, frame, n_up);
  auto params = ucj::from_t_amplitudes(t2, cfg.r, n,
                                       Eigen::MatrixXd::Identity(n, n));
  if (cfg.method == Method::Lucj)
    params = ucj::prune_to_topology(params, topology_by_name(cfg.topology, n));

  Determinant ref;
  ref.alpha = (n_up >= 32) ? ~0u : ((1u << n_up) - 1);
  ref.beta = (n_down >= 32) ? ~0u : ((1u << n_down) - 1);
  const auto circuit = ucj::synthesize_circuit(params, ref);
  if (census_out) *census_out = ucj::gate_census(circuit);
  return qsim::simulate_sector(circuit, n_up, n_down);
}

namespace {

// Sector-valid determinant probabilities out of a (possibly mitigated)
// sample set, normalized by the raw shot count.
std::unordered_map<std::uint64_t, double>
determinant_probs(const qsim::SampleSet& s, int n_up, int n_down,
                  std::int64_t raw_total) {
  std::unordered_map<std::uint64_t, double> probs;
  const std::uint32_t mask = (1u << s.n_orb) - 1;
  for (const auto& [bits, count] : s.counts) {
    const std::uint32_t a = bits & mask, b = bits >> s.n_orb;
    if (std::popcount(a) != n_up || std::popcount(b) != n_down) continue;
    Determinant d{a, b};
    probs[d.key()] += double(count) / double(raw_total);
  }
  return probs;
}

qsim::SampleSet mitigate_set(const qsim::SampleSet& s, mitigate::Mode mode,
                             int n_up, int n_down,
                             const mitigate::OccupancyStats& stats,
                             std::uint64_t seed) {
  switch (mode) {
    case mitigate::Mode::Recover:
      return mitigate::recover(s, n_up, n_down, stats, seed);
    case mitigate::Mode::Postselect:
      return mitigate::postselect(s, n_up, n_down);
    default:
      return s;
  }
}

// Multinomial subsample of `shots` draws from the empirical distribution of
// `master` (sequential conditional binomials; deterministic per seed).
qsim::SampleSet subsample(const qsim::SampleSet& master, std::int64_t shots,
                          std::uint64_t seed) {
  qsim::SampleSet out;
  out.n_orb = master.n_orb;
  out.origin = master.origin;
  std::mt19937_64 rng(seed);
  std::int64_t remaining_draws = shots;
  std::int64_t remaining_mass = master.total_shots;
  for (const auto& [bits, count] : master.counts) {
    if (remaining_draws == 0) break;
    const double p = double(count) / double(remaining_mass);
    std::int64_t k;
    if (p >= 1.0) {
      k = remaining_draws;
    } else {
      std::binomial_distribution<std::int64_t> bin(remaining_draws, p);
      k = bin(rng);
    }
    if (k > 0) {
      out.counts[bits] = k;
      out.total_shots += k;
      remaining_draws -= k;
    }
    remaining_mass -= count;
  }
  return out;
}

} // namespace

sci::DeterminantBasis basis_from_samples(const qsim::SampleSet& s, int n_up,
                                         int n_down) {
  std::vector<Determinant> dets;
  const std::uint32_t mask = (1u << s.n_orb) - 1;
  for (const auto& [bits, count] : s.counts) {
    const std::uint32_t a = bits & mask, b = bits >> s.n_orb;
    if (std::popcount(a) != n_up || std::popcount(b) != n_down) continue;
    dets.push_back(Determinant{a, b});
  }
  return sci::DeterminantBasis(std::move(dets));
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_up = cfg.chain.n_up, n_down = cfg.chain.n_down;

  const Hamiltonian H = build_chain(cfg);
  const auto basis = compute_basis(H, cfg.basis_kind, n_up);
  const Hamiltonian H_mo = model::rotate_integrals(H, basis.C);
  const auto fci = sci::fci_ground_state(H_mo, cfg.chain);

  ConvergenceResult result;
  result.e_fci = fci.energy;

  const auto state =
      prepare_state(cfg, H_mo, basis.energies, fci, &result.census);
  const auto shots = std::int64_t(std::llround(cfg.master_shots));
  auto master = qsim::sample(state, shots, cfg.seed);

  auto noise_mode = mitigate::Mode::None;
  if (cfg.noise) {
    noise_mode = cfg.noise->mitigation;
    result.calibrated_p_flip =
        cfg.noise->p_flip
            ? *cfg.noise->p_flip
            : qsim::calibrate_bitflip(H.n_orb, n_up, n_down,
                                      *cfg.noise->calibrate_target);
    master = qsim::apply_bitflip_noise(master, result.calibrated_p_flip,
                                       mix_seed(cfg.seed, 0xb175));
  }
  const auto stats = mitigate::occupancy_stats(master);
  const auto mitigated =
      mitigate_set(master, noise_mode, n_up, n_down, stats,
                   mix_seed(cfg.seed, 0x4ec0));

  // Empirical sector distribution (probabilities against the raw total, so
  // postselected mass sums below one) aligned with the full FCI sector.
  const auto probs = determinant_probs(mitigated, n_up, n_down,
                                       master.total_shots);
  result.master_unique = double(probs.size());

  std::vector<double> w(fci.basis.size()), p(fci.basis.size(), 0.0);
  for (std::size_t i = 0; i < fci.basis.size(); ++i) {
    w[i] = fci.vector[Eigen::Index(i)] * fci.vector[Eigen::Index(i)];
    if (auto it = probs.find(fci.basis[i].key()); it != probs.end())
      p[i] = it->second;
  }
  std::vector<double> p_support;
  p_support.reserve(probs.size());
  for (const auto& [key, prob] : probs) p_support.push_back(prob);

  const auto schedule =
      cfg.shots_schedule.empty() ? ExperimentConfig::default_schedule()
                                 : cfg.shots_schedule;
  for (std::size_t si = 0; si < schedule.size(); ++si) {
    const double S = schedule[si];
    CurvePoint pt;
    pt.shots = S;
    pt.f_expected = qsim::expected_missing_fraction(w, p, S);
    pt.unique_expected = qsim::expected_unique(p_support, S);
    pt.e_err_mean = kNan;
    pt.e_err_std = kNan;
    if (cfg.batches > 0) {
      std::vector<double> errs;
      for (int b = 0; b < cfg.batches; ++b) {
        const auto batch = subsample(master, std::int64_t(std::llround(S)),
                                     mix_seed(cfg.seed, 0x1000 * si + b));
        if (batch.total_shots == 0) continue;
        const auto fixed =
            mitigate_set(batch, noise_mode, n_up, n_down, stats,
                         mix_seed(cfg.seed, 0x9000 + 0x1000 * si + b));
        auto det_basis = basis_from_samples(fixed, n_up, n_down);
        if (det_basis.empty()) continue;
        errs.push_back(sci::diagonalize(det_basis, H_mo).energy - fci.energy);
      }
      if (!errs.empty()) {
        double mean = 0.0;
        for (double e : errs) mean += e;
        mean /= double(errs.size());
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        var /= double(errs.size());
        pt.e_err_mean = mean;
        pt.e_err_std = std::sqrt(var);
      }
    }
    result.curve.points.push_back(pt);
  }
  return result;
}

namespace {

// Log-log interpolation parameter of the first downward crossing; the
// returned pair is (left point index, fractional position).
std::optional<std::pair<std::size_t, double>>
find_crossing(const ConvergenceCurve& curve, double threshold) {
  const auto& pts = curve.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double e = pts[k].e_err_mean;
    if (!std::isfinite(e) || e >= threshold) continue;
    if (k == 0) return std::make_pair(std::size_t(0), 0.0);
    const double e_prev = pts[k - 1].e_err_mean;
    if (!std::isfinite(e_prev)) return std::make_pair(k, 0.0);
    const double lo = std::log10(std::max(e, 1e-300));
    const double hi = std::log10(std::max(e_prev, 1e-300));
    const double t = (hi == lo) ? 1.0 : (hi - std::log10(threshold)) / (hi - lo);
    return std::make_pair(k - 1, std::clamp(t, 0.0, 1.0));
  }
  return std::nullopt;
}

double log_lerp(double a, double b, double t) {
  return std::pow(10.0, (1.0 - t) * std::log10(std::max(a, 1e-300)) +
                            t * std::log10(std::max(b, 1e-300)));
}

} // namespace

std::optional<double> shots_to_accuracy(const ConvergenceCurve& curve,
                                        double threshold) {
  const auto cross = find_crossing(curve, threshold);
  if (!cross) return std::nullopt;
  const auto [k, t] = *cross;
  if (t == 0.0) return curve.points[k].shots;
  return log_lerp(curve.points[k].shots, curve.points[k + 1].shots, t);
}

std::optional<double> dets_at_accuracy(const ConvergenceCurve& curve,
                                       double threshold) {
  const auto cross = find_crossing(curve, threshold);
  if (!cross) return std::nullopt;
  const auto [k, t] = *cross;
  if (t == 0.0) return curve.points[k].unique_expected;
  return log_lerp(curve.points[k].unique_expected,
                  curve.points[k + 1].unique_expected, t);
}

double fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_power_law: need at least two points");
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys;
  for (const auto& [x, y] : points) {
    if (x <= 0.0 || y <= 0.0)
      throw std::invalid_argument("fit_power_law: points must be positive");
    xs.push_back(std::log(x));
    ys.push_back(std::log(y));
    sx += xs.back();
    sy += ys.back();
  }
  const double mx = sx / double(xs.size()), my = sy / double(ys.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (den == 0.0)
    throw std::invalid_argument("fit_power_law: degenerate abscissae");
  return num / den;
}

double spin_gap(const Hamiltonian& H, const ChainSpec& spec) {
  ChainSpec sz0 = spec;
  ChainSpec sz1 = spec;
  sz1.n_up = spec.n_up + 1;
  sz1.n_down = spec.n_down - 1;
  sz0.validate();
  sz1.validate();
  const auto g0 = sci::fci_ground_state(H, sz0);
  const auto g1 = sci::fci_ground_state(H, sz1);
  return g1.energy - g0.energy;
}

std::string to_csv(const ConvergenceCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "shots,f_expected,unique_expected,e_err_mean,e_err_std\n";
  for (const auto& p : curve.points)
    out << p.shots << ',' << p.f_expected << ',' << p.unique_expected << ','
        << p.e_err_mean << ',' << p.e_err_std << '\n';
  return out.str();
}

ConvergenceCurve curve_from_csv(const std::string& text) {
  ConvergenceCurve curve;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "shots,f_expected,unique_expected,e_err_mean,e_err_std")
    throw std::invalid_argument("curve_from_csv: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::istringstream ls(line);
    std::string cell;
    // std::stod (unlike stream extraction) accepts "nan".
    while (std::getline(ls, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != 5)
      throw std::invalid_argument("curve_from_csv: bad row '" + line + "'");
    curve.points.push_back(
        {fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  return curve;
}

std::string to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["chain"] = {{"L", cfg.chain.L},
                {"n_up", cfg.chain.n_up},
                {"n_down", cfg.chain.n_down},
                {"screening_factor", cfg.chain.screening_factor},
                {"kinetic_scale", cfg.chain.kinetic_scale}};
  j["surrogate"] = {{"eps_d", cfg.surrogate.eps_d},
                    {"eps_p", cfg.surrogate.eps_p},
                    {"t_pd", cfg.surrogate.t_pd},
                    {"U_d", cfg.surrogate.U_d},
                    {"U_p", cfg.surrogate.U_p},
                    {"U_pd", cfg.surrogate.U_pd},
                    {"x_offdiag", cfg.surrogate.x_offdiag}};
  if (cfg.integrals_file) j["integrals_file"] = *cfg.integrals_file;
  j["basis"] = to_string(cfg.basis_kind);
  j["method"] = to_string(cfg.method);
  j["r"] = cfg.r;
  j["topology"] = cfg.topology;
  j["shots_schedule"] = cfg.shots_schedule;
  j["master_shots"] = cfg.master_shots;
  j["batches"] = cfg.batches;
  j["seed"] = cfg.seed;
  j["chemical_accuracy"] = cfg.chemical_accuracy;
  if (cfg.noise) {
    nlohmann::json n;
    if (cfg.noise->p_flip) n["p_flip"] = *cfg.noise->p_flip;
    if (cfg.noise->calibrate_target)
      n["calibrate_target"] = *cfg.noise->calibrate_target;
    n["mitigation"] = mitigate::to_string(cfg.noise->mitigation);
    j["noise"] = n;
  }
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("chain")) {
    const auto& c = j.at("chain");
    cfg.chain.L = c.value("L", cfg.chain.L);
    if (c.contains("n_up") != c.contains("n_down"))
      throw std::invalid_argument("config: give both n_up and n_down or neither");
    if (c.contains("n_up")) {
      cfg.chain.n_up = c.at("n_up").get<int>();
      cfg.chain.n_down = c.at("n_down").get<int>();
    } else {
      cfg.chain = ChainSpec::with_default_filling(cfg.chain.L);
    }
    cfg.chain.screening_factor =
        c.value("screening_factor", cfg.chain.screening_factor);
    cfg.chain.kinetic_scale = c.value("kinetic_scale", cfg.chain.kinetic_scale);
  }
  if (j.contains("surrogate")) {
    const auto& s = j.at("surrogate");
    cfg.surrogate.eps_d = s.value("eps_d", cfg.surrogate.eps_d);
    cfg.surrogate.eps_p = s.value("eps_p", cfg.surrogate.eps_p);
    cfg.surrogate.t_pd = s.value("t_pd", cfg.surrogate.t_pd);
    cfg.surrogate.U_d = s.value("U_d", cfg.surrogate.U_d);
    cfg.surrogate.U_p = s.value("U_p", cfg.surrogate.U_p);
    cfg.surrogate.U_pd = s.value("U_pd", cfg.surrogate.U_pd);
    cfg.surrogate.x_offdiag = s.value("x_offdiag", cfg.surrogate.x_offdiag);
  }
  if (j.contains("integrals_file"))
    cfg.integrals_file = j.at("integrals_file").get<std::string>();
  if (j.contains("basis"))
    cfg.basis_kind = basis_kind_from_string(j.at("basis").get<std::string>());
  if (j.contains("method"))
    cfg.method = method_from_string(j.at("method").get<std::string>());
  cfg.r = j.value("r", cfg.r);
  cfg.topology = j.value("topology", cfg.topology);
  if (j.contains("shots_schedule"))
    cfg.shots_schedule = j.at("shots_schedule").get<std::vector<double>>();
  cfg.master_shots = j.value("master_shots", cfg.master_shots);
  cfg.batches = j.value("batches", cfg.batches);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.chemical_accuracy = j.value("chemical_accuracy", cfg.chemical_accuracy);
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    NoiseConfig nc;
    if (n.contains("p_flip")) nc.p_flip = n.at("p_flip").get<double>();
    if (n.contains("calibrate_target"))
      nc.calibrate_target = n.at("calibrate_target").get<double>();
    nc.mitigation =
        mitigate::mode_from_string(n.value("mitigation", std::string("none")));
    cfg.noise = nc;
  }
  cfg.validate();
  return cfg;
}

} // namespace sqdlab::lab
