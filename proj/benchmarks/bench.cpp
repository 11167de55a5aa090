#include <benchmark/benchmark.h>

#include "sqdlab/lab.hpp"
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

void bm_scf(benchmark::State& state) {
  const int L = int(state.range(0));
  const auto H = chain(L);
  const int ne = 3 * L / 2;
  for (auto _ : state)
    benchmark::DoNotOptimize(orbitals::solve_hf(H, ne, ne).energy);
}
BENCHMARK(bm_scf)->Arg(2)->Arg(4)->Arg(6);

void bm_sci_matrix_build(benchmark::State& state) {
  const int L = int(state.range(0));
  const auto H = chain(L);
  const int ne = 3 * L / 2;
  const auto basis = sci::DeterminantBasis::full_sector(2 * L, ne, ne);
  for (auto _ : state) {
    sci::SciMatrix m(basis, H);
    benchmark::DoNotOptimize(m.nonzeros());
  }
}
BENCHMARK(bm_sci_matrix_build)->Arg(2)->Arg(4);

void bm_full_sector_diagonalization(benchmark::State& state) {
  const int L = int(state.range(0));
  const auto H = chain(L);
  const auto spec = model::ChainSpec::with_default_filling(L);
  for (auto _ : state)
    benchmark::DoNotOptimize(sci::fci_ground_state(H, spec).energy);
}
BENCHMARK(bm_full_sector_diagonalization)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_circuit_simulation(benchmark::State& state) {
  const int L = int(state.range(0));
  const auto H = chain(L);
  const int ne = 3 * L / 2;
  const auto hf = orbitals::solve_hf(H, ne, ne);
  const auto H_mo = model::rotate_integrals(H, hf.basis.C);
  orbitals::OrbitalBasis frame;
  frame.C = Eigen::MatrixXd::Identity(H.n_orb, H.n_orb);
  frame.energies = hf.basis.energies;
  const auto t2 = orbitals::compute_t2(H_mo, frame, ne);
  const auto params = ucj::from_t_amplitudes(
      t2, 1, H.n_orb, Eigen::MatrixXd::Identity(H.n_orb, H.n_orb));
  const std::uint32_t ref = (1u << ne) - 1;
  const auto c = ucj::synthesize_circuit(params, Determinant{ref, ref});
  for (auto _ : state)
    benchmark::DoNotOptimize(qsim::simulate_sector(c, ne, ne).norm());
}
BENCHMARK(bm_circuit_simulation)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_sampling(benchmark::State& state) {
  const auto spec = model::ChainSpec::with_default_filling(4);
  const auto fci = sci::fci_ground_state(chain(4), spec);
  qsim::SectorState s;
  s.n_orb = 8;
  s.n_up = s.n_down = 6;
  s.alpha_strings = qsim::enumerate_strings(8, 6);
  s.beta_strings = s.alpha_strings;
  s.amps.assign(s.dim(), {0.0, 0.0});
  for (std::size_t i = 0; i < fci.basis.size(); ++i)
    s.amps[i] = fci.vector[Eigen::Index(i)];
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(qsim::sample(s, 100000, ++seed).total_shots);
}
BENCHMARK(bm_sampling)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
