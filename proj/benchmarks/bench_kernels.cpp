// Serial reference vs OpenMP kernels. The two paths are bit-identical by
// construction (see test_numkit.cpp); this target measures what the second
// core buys on the dense product and the pairwise scoring sweep.
#include <benchmark/benchmark.h>

#include "topotrack/kernels.hpp"
#include "topotrack/providers.hpp"
#include "topotrack/rng.hpp"

using namespace topotrack;

namespace {

Matrix random_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
  SeededRng rng(seed);
  return Matrix::random_uniform(n, m, -1.0, 1.0, rng);
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) {
    Matrix c = kernels::matmul_serial(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void BM_MatmulOpenMP(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) {
    Matrix c = kernels::matmul(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

// the tracker's hottest loop: an MLP evaluation per (detection, tracklet) pair
template <bool Parallel>
void BM_PairwiseScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SeededRng rng(3);
  const AppearanceMatcher matcher = AppearanceMatcher::random(16, 32, rng);
  std::vector<std::vector<double>> dets(n), trks(n);
  for (auto& d : dets) {
    d.resize(16);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  }
  for (auto& t : trks) {
    t.resize(16);
    for (auto& v : t) v = rng.uniform(-1.0, 1.0);
  }
  Matrix out(n, n);
  for (auto _ : state) {
    auto fill = [&](std::size_t i, std::size_t j) { out(i, j) = matcher.score(dets[i], trks[j]); };
    if constexpr (Parallel)
      kernels::for_each_pair(n, n, fill);
    else
      kernels::for_each_pair_serial(n, n, fill);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_MatmulOpenMP)->Arg(64)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_PairwiseScores<false>)->Name("BM_PairwiseScoresSerial")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_PairwiseScores<true>)->Name("BM_PairwiseScoresOpenMP")->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
