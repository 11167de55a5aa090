// labcli: batch driver for the chain-SQD laboratory. Subcommands cover the
// pipeline stages individually plus the convergence / scaling sweeps.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "sqdlab/lab.hpp"

namespace fs = std::filesystem;
using namespace sqdlab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

lab::ExperimentConfig load_config(const GlobalOpts& g) {
  lab::ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw std::runtime_error("cannot open config '" + g.config_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg = lab::config_from_json(ss.str());
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_meta(const fs::path& dir, const lab::ExperimentConfig& cfg,
                const nlohmann::json& extra) {
  nlohmann::json meta;
  meta["config"] = nlohmann::json::parse(lab::to_json(cfg));
  meta["seed"] = cfg.seed;
  meta["version"] = kVersion;
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = *it;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

// Shared pipeline front end: chain Hamiltonian, orbital basis, rotated
// integrals, FCI reference.
struct Pipeline {
  model::Hamiltonian H;
  orbitals::OrbitalBasis basis;
  model::Hamiltonian H_mo;
  sci::GroundState fci;
};

Pipeline run_front(const lab::ExperimentConfig& cfg, bool need_fci = true) {
  Pipeline p;
  p.H = lab::build_chain(cfg);
  p.basis = lab::compute_basis(p.H, cfg.basis_kind, cfg.chain.n_up);
  p.H_mo = model::rotate_integrals(p.H, p.basis.C);
  if (need_fci) p.fci = sci::fci_ground_state(p.H_mo, cfg.chain);
  return p;
}

int cmd_build_chain(const GlobalOpts& g) {
  const auto cfg = load_config(g);
  const auto H = lab::build_chain(cfg);
  write_file(fs::path(g.out_dir) / "hamiltonian.json", model::to_json(H));
  std::cout << "L=" << cfg.chain.L << " n_orb=" << H.n_orb
            << " n_up=" << cfg.chain.n_up << " n_down=" << cfg.chain.n_down
            << "\n";
  return 0;
}

int cmd_bases(const GlobalOpts& g) {
  auto cfg = load_config(g);
  const auto H = lab::build_chain(cfg);
  const int no = cfg.chain.n_up;
  const auto hf = orbitals::solve_hf(H, no, no);
  const auto kin = orbitals::kinetic_basis(H);
  const auto hfp = orbitals::hfplus_basis(H, hf.basis);
  std::cout << "HF energy: " << hf.energy << " eV (" << hf.iterations
            << " iterations)\n";
  const auto t2 = orbitals::compute_t2(H, hf.basis, no);
  std::cout << "MP2 correlation energy: "
            << orbitals::mp2_correlation_energy(H, hf.basis, t2) << " eV\n";
  auto dump = [](const char* name, const orbitals::OrbitalBasis& b) {
    std::cout << name << " energies:";
    for (int i = 0; i < b.energies.size(); ++i) std::cout << ' ' << b.energies[i];
    std::cout << "\n";
  };
  dump("hf", hf.basis);
  dump("kin", kin);
  dump("hf+", hfp);
  write_file(fs::path(g.out_dir) / "t2.json", orbitals::to_json(t2));
  return 0;
}

lab::ExperimentConfig circuit_config(const GlobalOpts& g) {
  auto cfg = load_config(g);
  if (cfg.method == lab::Method::IdealSqd) cfg.method = lab::Method::Ucj;
  return cfg;
}

int cmd_ucj_params(const GlobalOpts& g) {
  const auto cfg = circuit_config(g);
  const auto p = run_front(cfg, false);
  orbitals::OrbitalBasis frame;
  frame.kind = cfg.basis_kind;
  frame.C = Eigen::MatrixXd::Identity(p.H_mo.n_orb, p.H_mo.n_orb);
  frame.energies = p.basis.energies;
  const auto t2 = orbitals::compute_t2(p.H_mo, frame, cfg.chain.n_up);
  auto params = ucj::from_t_amplitudes(
      t2, cfg.r, p.H_mo.n_orb, Eigen::MatrixXd::Identity(p.H_mo.n_orb, p.H_mo.n_orb));
  std::cout << "reconstruction residual (r=" << cfg.r
            << "): " << ucj::reconstruction_residual(t2, params) << "\n";
  if (cfg.method == lab::Method::Lucj)
    params = ucj::prune_to_topology(
        params, lab::topology_by_name(cfg.topology, p.H_mo.n_orb));
  const auto hist = ucj::cp_histogram(params, 20);
  std::cout << "phase-angle histogram: " << hist.total << " entries, "
            << 100.0 * hist.low_amplitude_fraction << "% low-amplitude\n";
  write_file(fs::path(g.out_dir) / "ucj_params.json", ucj::to_json(params));
  return 0;
}

ucj::Circuit build_circuit(const lab::ExperimentConfig& cfg,
                           const Pipeline& p) {
  orbitals::OrbitalBasis frame;
  frame.kind = cfg.basis_kind;
  frame.C = Eigen::MatrixXd::Identity(p.H_mo.n_orb, p.H_mo.n_orb);
  frame.energies = p.basis.energies;
  const auto t2 = orbitals::compute_t2(p.H_mo, frame, cfg.chain.n_up);
  auto params = ucj::from_t_amplitudes(
      t2, cfg.r, p.H_mo.n_orb, Eigen::MatrixXd::Identity(p.H_mo.n_orb, p.H_mo.n_orb));
  if (cfg.method == lab::Method::Lucj)
    params = ucj::prune_to_topology(
        params, lab::topology_by_name(cfg.topology, p.H_mo.n_orb));
  Determinant ref;
  ref.alpha = (1u << cfg.chain.n_up) - 1;
  ref.beta = (1u << cfg.chain.n_down) - 1;
  return ucj::synthesize_circuit(params, ref);
}

int cmd_simulate(const GlobalOpts& g) {
  const auto cfg = circuit_config(g);
  const auto p = run_front(cfg, false);
  const auto circuit = build_circuit(cfg, p);
  const auto census = ucj::gate_census(circuit);
  std::cout << "gates: " << census.n_xxpyy << " XXPlusYY, " << census.n_cp
            << " CPhase (" << census.n_cp_same << " same-spin, "
            << census.n_cp_opp << " cross-spin)\n";
  const auto state =
      qsim::simulate_sector(circuit, cfg.chain.n_up, cfg.chain.n_down);
  std::cout << "sector dimension " << state.dim() << ", norm " << state.norm()
            << "\n";
  // Dominant configurations, largest probability first.
  std::vector<std::pair<double, std::size_t>> top;
  for (std::size_t i = 0; i < state.dim(); ++i)
    top.emplace_back(std::norm(state.amps[i]), i);
  std::partial_sort(top.begin(), top.begin() + std::min<std::size_t>(10, top.size()),
                    top.end(), std::greater<>());
  for (std::size_t k = 0; k < std::min<std::size_t>(10, top.size()); ++k) {
    const auto d = state.determinant(top[k].second);
    std::cout << "  p=" << top[k].first << "  alpha=" << std::hex << d.alpha
              << " beta=" << d.beta << std::dec << "\n";
  }
  write_file(fs::path(g.out_dir) / "circuit.txt", ucj::to_text(circuit));
  return 0;
}

int cmd_sample(const GlobalOpts& g, double shots, double p_flip) {
  const auto cfg = load_config(g);
  const auto p = run_front(cfg, cfg.method == lab::Method::IdealSqd);
  const auto state =
      lab::prepare_state(cfg, p.H_mo, p.basis.energies, p.fci);
  auto s = qsim::sample(state, std::int64_t(std::llround(shots)), cfg.seed);
  if (p_flip > 0.0) s = qsim::apply_bitflip_noise(s, p_flip, cfg.seed + 1);
  std::cout << s.total_shots << " shots, " << s.counts.size()
            << " distinct bitstrings\n";
  write_file(fs::path(g.out_dir) / "samples.csv", qsim::to_csv(s));
  return 0;
}

int cmd_mitigate(const GlobalOpts& g, const std::string& in_path,
                 const std::string& mode_name) {
  const auto cfg = load_config(g);
  const auto s = qsim::sample_set_from_csv(read_file(in_path));
  const auto mode = mitigate::mode_from_string(mode_name);
  const auto stats = mitigate::occupancy_stats(s);
  qsim::SampleSet out = s;
  if (mode == mitigate::Mode::Postselect)
    out = mitigate::postselect(s, cfg.chain.n_up, cfg.chain.n_down);
  else if (mode == mitigate::Mode::Recover)
    out = mitigate::recover(s, cfg.chain.n_up, cfg.chain.n_down, stats, cfg.seed);
  std::cout << "kept " << out.total_shots << "/" << s.total_shots << " shots, "
            << out.counts.size() << " distinct bitstrings\n";
  write_file(fs::path(g.out_dir) / "mitigated.csv", qsim::to_csv(out));
  return 0;
}

int cmd_sci(const GlobalOpts& g, const std::string& in_path) {
  const auto cfg = load_config(g);
  const auto p = run_front(cfg);
  sci::DeterminantBasis basis;
  if (in_path.empty()) {
    basis = sci::DeterminantBasis::full_sector(p.H.n_orb, cfg.chain.n_up,
                                               cfg.chain.n_down);
  } else {
    const auto s = qsim::sample_set_from_csv(read_file(in_path));
    std::vector<Determinant> dets;
    const std::uint32_t mask = (1u << s.n_orb) - 1;
    for (const auto& [bits, count] : s.counts) {
      Determinant d{bits & mask, bits >> s.n_orb};
      if (d.n_alpha() == cfg.chain.n_up && d.n_beta() == cfg.chain.n_down)
        dets.push_back(d);
    }
    basis = sci::DeterminantBasis(std::move(dets));
  }
  const auto g0 = sci::diagonalize(basis, p.H_mo);
  std::cout << "selected-CI energy: " << g0.energy << " eV over "
            << basis.size() << " determinants\n";
  std::cout << "FCI energy: " << p.fci.energy << " eV, error "
            << g0.energy - p.fci.energy << " eV\n";
  std::cout << "missing fraction of basis: "
            << sci::missing_fraction(p.fci, basis) << "\n";
  std::cout << "<S^2> = " << sci::spin_squared(g0, p.H.n_orb) << "\n";
  const auto occ = sci::orbital_occupations(p.fci, p.H.n_orb);
  std::cout << "orbital occupations (MO frame):";
  for (int i = 0; i < occ.size(); ++i) std::cout << ' ' << occ[i];
  std::cout << "\n";
  return 0;
}

int cmd_convergence(const GlobalOpts& g) {
  const auto cfg = load_config(g);
  const auto result = lab::run_convergence(cfg);
  write_file(fs::path(g.out_dir) / "curve.csv", lab::to_csv(result.curve));
  nlohmann::json extra;
  extra["e_fci"] = result.e_fci;
  extra["master_unique"] = result.master_unique;
  extra["calibrated_p_flip"] = result.calibrated_p_flip;
  extra["n_two_qubit"] = result.census.n_two_qubit;
  const auto s_acc = lab::shots_to_accuracy(result.curve, cfg.chemical_accuracy);
  const auto d_acc = lab::dets_at_accuracy(result.curve, cfg.chemical_accuracy);
  extra["shots_to_accuracy"] = s_acc ? nlohmann::json(*s_acc) : nlohmann::json();
  extra["dets_at_accuracy"] = d_acc ? nlohmann::json(*d_acc) : nlohmann::json();
  write_meta(fs::path(g.out_dir), cfg, extra);
  std::cout << "E_FCI = " << result.e_fci << " eV\n";
  if (s_acc)
    std::cout << "chemical accuracy at ~" << *s_acc << " shots, ~" << *d_acc
              << " determinants\n";
  else
    std::cout << "chemical accuracy not reached within the schedule\n";
  return 0;
}

int cmd_scaling(const GlobalOpts& g, std::vector<int> Ls) {
  const auto base = load_config(g);
  std::ostringstream csv;
  csv << "L,shots_to_acc,dets_at_acc,n_two_qubit\n";
  std::vector<std::pair<double, double>> gate_points;
  for (int L : Ls) {
    auto cfg = base;
    cfg.chain = model::ChainSpec::with_default_filling(L);
    cfg.chain.screening_factor = base.chain.screening_factor;
    cfg.chain.kinetic_scale = base.chain.kinetic_scale;
    const auto result = lab::run_convergence(cfg);
    const auto s_acc = lab::shots_to_accuracy(result.curve, cfg.chemical_accuracy);
    const auto d_acc = lab::dets_at_accuracy(result.curve, cfg.chemical_accuracy);
    csv << L << ',' << (s_acc ? *s_acc : -1.0) << ','
        << (d_acc ? *d_acc : -1.0) << ',' << result.census.n_two_qubit << '\n';
    if (result.census.n_two_qubit > 0)
      gate_points.emplace_back(double(L), double(result.census.n_two_qubit));
    std::cout << "L=" << L << " done (" << result.census.n_two_qubit
              << " two-qubit gates)\n";
  }
  write_file(fs::path(g.out_dir) / "scaling.csv", csv.str());
  if (gate_points.size() >= 2)
    std::cout << "two-qubit gate count ~ L^"
              << lab::fit_power_law(gate_points) << "\n";
  return 0;
}

int cmd_spin_gap(const GlobalOpts& g, std::vector<int> Ls, bool heisenberg) {
  const auto base = load_config(g);
  std::vector<double> gaps;
  for (int L : Ls) {
    auto cfg = base;
    cfg.chain = model::ChainSpec::with_default_filling(L);
    cfg.chain.screening_factor = base.chain.screening_factor;
    cfg.chain.kinetic_scale = base.chain.kinetic_scale;
    auto H = lab::build_chain(cfg);
    if (heisenberg) H = model::zero_interplaquette_coulomb(H);
    gaps.push_back(lab::spin_gap(H, cfg.chain));
    std::cout << "L=" << L << " spin gap " << gaps.back() << " eV\n";
  }
  if (heisenberg && gaps.size() > 1) {
    std::cout << "gap ratios vs L=" << Ls.front() << ":";
    for (double gap : gaps) std::cout << ' ' << gap / gaps.front();
    std::cout << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"chain-SQD laboratory driver"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config JSON");
  app.add_option("--out-dir", g.out_dir, "output directory");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "RNG seed override");

  double shots = 1000.0, p_flip = 0.0;
  std::string in_path, mode_name = "postselect";
  std::vector<int> Ls{2, 4, 6};
  bool heisenberg = false;

  app.add_subcommand("build-chain", "emit the chain Hamiltonian JSON");
  app.add_subcommand("bases", "HF / kinetic / HF+ orbital bases and t2");
  app.add_subcommand("ucj-params", "factorize t2 into UCJ parameters");
  app.add_subcommand("simulate", "synthesize and simulate the circuit");
  auto* sample = app.add_subcommand("sample", "draw measurement samples");
  sample->add_option("--shots", shots, "shot count");
  sample->add_option("--p-flip", p_flip, "bitflip noise probability");
  auto* mit = app.add_subcommand("mitigate", "mitigate a sample CSV");
  mit->add_option("--in", in_path, "samples.csv path")->required();
  mit->add_option("--mode", mode_name, "none|postselect|recover");
  auto* sci_cmd = app.add_subcommand("sci", "selected CI over samples or full sector");
  sci_cmd->add_option("--in", in_path, "samples.csv path (full sector if absent)");
  app.add_subcommand("convergence", "run the convergence sweep");
  auto* scal = app.add_subcommand("scaling", "convergence sweep across chain lengths");
  scal->add_option("--L", Ls, "chain lengths");
  auto* gap = app.add_subcommand("spin-gap", "lowest spin excitation per length");
  gap->add_option("--L", Ls, "chain lengths");
  gap->add_flag("--heisenberg", heisenberg, "zero interplaquette Coulomb first");

  CLI11_PARSE(app, argc, argv);
  if (*seed_flag) g.seed = seed_opt;

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "build-chain") return cmd_build_chain(g);
    if (name == "bases") return cmd_bases(g);
    if (name == "ucj-params") return cmd_ucj_params(g);
    if (name == "simulate") return cmd_simulate(g);
    if (name == "sample") return cmd_sample(g, shots, p_flip);
    if (name == "mitigate") return cmd_mitigate(g, in_path, mode_name);
    if (name == "sci") return cmd_sci(g, in_path);
    if (name == "convergence") return cmd_convergence(g);
    if (name == "scaling") return cmd_scaling(g, Ls);
    if (name == "spin-gap") return cmd_spin_gap(g, Ls, heisenberg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
