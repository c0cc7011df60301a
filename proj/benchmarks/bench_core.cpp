#include "rpl/datasets.hpp"
#include "rpl/guarantees.hpp"
#include "rpl/kernels.hpp"
#include "rpl/linalg.hpp"
#include "rpl/loss.hpp"
#include "rpl/network.hpp"
#include "rpl/retrieval.hpp"
#include "rpl/rng.hpp"
#include "rpl/trainer.hpp"

#include <benchmark/benchmark.h>

using namespace rpl;

namespace {

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const Matrix a = gaussian(n, n, 1);
  const Matrix s = a + a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eig(s));
}
BENCHMARK(BM_SymEig)->Arg(64)->Arg(128)->Arg(256);

void BM_RelationshipMatrix(benchmark::State& state) {
  const Matrix x = gaussian(128, 24, 2);
  kernels::RelationshipConfig cfg;
  cfg.kind = static_cast<kernels::RelationshipKind>(state.range(0));
  if (cfg.kind == kernels::RelationshipKind::RbfKernel) cfg.gamma = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::relationship_matrix(x, cfg));
  state.SetLabel(std::string(kernels::to_string(cfg.kind)));
}
BENCHMARK(BM_RelationshipMatrix)->DenseRange(0, 3);

void BM_LossAndGradient(benchmark::State& state) {
  const Matrix x = gaussian(128, 24, 3);
  const Matrix y = gaussian(128, 3, 4);
  const kernels::RelationshipConfig rel;
  loss::LossConfig lc;
  lc.masking = state.range(0) ? loss::Masking::TopK : loss::Masking::None;
  lc.top_k = 4096;
  const Matrix r_high = kernels::relationship_matrix(x, rel);
  for (auto _ : state) {
    const auto mask = loss::build_mask(r_high, lc);
    benchmark::DoNotOptimize(loss::rpl_loss_and_grad(r_high, y, mask, rel, lc));
  }
}
BENCHMARK(BM_LossAndGradient)->Arg(0)->Arg(1);

void BM_TrainEpoch(benchmark::State& state) {
  data::CinnamonRollOptions opts;
  opts.n = 2000;
  opts.seed = 5;
  const Matrix x = data::lift_to_high_dim(data::generate_cinnamon_roll(opts), 24, 5).points;
  const std::size_t dims[] = {24, 64, 64, 3};
  const auto init = nn::init_params(dims, nn::Activation::Tanh, 6);
  train::TrainConfig tc;
  tc.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train::train(x, 3, {}, {}, tc, init));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_FullAudit(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const Matrix x = gaussian(n, 24, 7);
  const Matrix y = x.leftCols(3) + 0.01 * gaussian(n, 3, 8);
  audit::AuditConfig cfg;
  cfg.sensitivity_probes = 100;
  for (auto _ : state) benchmark::DoNotOptimize(audit::full_audit(x, y, {}, cfg));
}
BENCHMARK(BM_FullAudit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RankMatrix(benchmark::State& state) {
  const Matrix a = gaussian(1000, 16, 9);
  const Matrix b = a + 0.5 * gaussian(1000, 16, 10);
  kernels::RelationshipConfig cos;
  cos.kind = kernels::RelationshipKind::Cosine;
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::rank_matrix(a, b, cos));
}
BENCHMARK(BM_RankMatrix)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
