#include <benchmark/benchmark.h>

#include "ngcn/dataset.hpp"
#include "ngcn/models.hpp"
#include "ngcn/ops.hpp"
#include "ngcn/training.hpp"

using namespace ngcn;

namespace {

// Citation-graph sized synthetic data: sparse binary features, sparse graph.
Dataset citation_like(std::size_t n, std::size_t f, std::size_t c, std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.name = "synthetic";
  d.n = n;
  d.features = DenseMatrix(n, f);
  d.labels = DenseMatrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 18; ++k) d.features(i, rng.below(f)) = 1.0;
    d.labels(i, rng.below(c)) = 1.0;
  }
  for (std::size_t e = 0; e < edges; ++e) d.edges.emplace_back(rng.below(n), rng.below(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < 20 * c ? d.split.train : i < 20 * c + 500 ? d.split.val : d.split.test;
    dst.push_back(i);
  }
  return d;
}

const Dataset& cora_like() {
  static const Dataset d = citation_like(2708, 1433, 7, 5429, 1);
  return d;
}

void BM_Spmm(benchmark::State& state) {
  const auto& d = cora_like();
  const auto in = prepare_inputs(d, Normalization::symmetric);
  Rng rng(2);
  DenseMatrix h(d.n, static_cast<std::size_t>(state.range(0)));
  for (double& v : h.values()) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::spmm(*in.adjacency, h));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.adjacency->nnz()) * state.range(0));
}
BENCHMARK(BM_Spmm)->Arg(7)->Arg(16)->Arg(64);

void BM_FeatureProjection(benchmark::State& state) {
  const auto& d = cora_like();
  const auto in = prepare_inputs(d, Normalization::symmetric);
  Rng rng(3);
  const DenseMatrix w = glorot_init(d.num_features(), 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::spmm(*in.features, w));
}
BENCHMARK(BM_FeatureProjection);

void BM_TrainStep(benchmark::State& state) {
  const auto& d = cora_like();
  const int K = static_cast<int>(state.range(0));
  const int r = static_cast<int>(state.range(1));
  const ModelSpec spec = K == 1 && r == 1 ? ModelSpec::gcn() : ModelSpec::ngcn(K, r, Combiner::fc);
  const auto in = prepare_inputs(d, spec.normalization);
  TrainSpec t;
  t.steps = 1;
  t.runs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(spec, t, d, in));
}
BENCHMARK(BM_TrainStep)->Args({1, 1})->Args({5, 4})->Args({6, 4})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
