#include <benchmark/benchmark.h>

#include <complex>
#include <random>

#include "ldlab/fourier.hpp"
#include "ldlab/lattice.hpp"
#include "ldlab/model.hpp"
#include "ldlab/potential.hpp"
#include "ldlab/solver.hpp"

namespace {

using namespace ldlab;

struct Setup {
  std::shared_ptr<PairPotential> pot = make_morse(4.0, 1.5, 2.3);
  std::shared_ptr<const Supercell> cell;
  Vector u;

  explicit Setup(int n) {
    Matrix a(2, 2);
    a << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
    const double a0 = find_lattice_parameter(*pot, a).a0;
    auto hom = LatticeModel::homogeneous(a0 * a, 2, pot->cutoff());
    auto model = std::make_shared<const LatticeModel>(hom.with_defect({Vector::Zero(2)}, {}, 0.5 * a0));
    cell = Supercell::build(model, IntMatrix(IntMatrix::Identity(2, 2)), n);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uni(-0.01, 0.01);
    u.resize(static_cast<Eigen::Index>(cell->dofs()));
    for (auto& x : u) x = uni(rng);
  }
};

void BM_EnergyGradient(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)));
  Assembly asm_(s.cell, s.pot);
  Vector g;
  for (auto _ : state) benchmark::DoNotOptimize(asm_.energy_gradient(s.u, g));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.cell->size()));
}
BENCHMARK(BM_EnergyGradient)->Arg(16)->Arg(32)->Arg(64);

void BM_HessianApply(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)));
  Assembly asm_(s.cell, s.pot);
  const Vector v = s.u.reverse();
  for (auto _ : state) benchmark::DoNotOptimize(asm_.hessian_apply(s.u, v));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.cell->size()));
}
BENCHMARK(BM_HessianApply)->Arg(16)->Arg(32)->Arg(64);

void BM_Preconditioner(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)));
  Preconditioner pc(s.cell, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(pc.apply(s.u));
}
BENCHMARK(BM_Preconditioner)->Arg(16)->Arg(32)->Arg(64);

void BM_FourierForward(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  FourierGrid grid(Matrix::Identity(3, 3), 2 * n * IntMatrix::Identity(3, 3));
  std::vector<FourierGrid::Complex> data(grid.size(), 1.0);
  for (auto _ : state) {
    grid.forward(data);
    benchmark::DoNotOptimize(data.data());
  }
}
BENCHMARK(BM_FourierForward)->Arg(8)->Arg(16);

}  // namespace
BENCHMARK_MAIN();
