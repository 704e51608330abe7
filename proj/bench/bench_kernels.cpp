// Serial reference vs OpenMP variants of the data-parallel kernels.
#include <benchmark/benchmark.h>

#include "mailtopics/kernels.hpp"
#include "synth.hpp"

using namespace mailtopics;

namespace {

RowMatrix random_points(Eigen::Index n, Eigen::Index dim) {
  synth::Rng rng(static_cast<std::uint64_t>(n * 131 + dim));
  RowMatrix x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < dim; ++d) x(i, d) = rng.uniform() - 0.5;
  return x;
}

std::vector<std::string> texts(std::size_t n) {
  synth::Rng rng(5);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth::family_text(static_cast<int>(i % 4), 20, rng));
  return out;
}

template <auto Kernel>
void core_distances(benchmark::State& state) {
  const auto x = random_points(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(x, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto CoreKernel, auto MstKernel>
void mst(benchmark::State& state) {
  const auto x = random_points(state.range(0), 5);
  const auto core = CoreKernel(x, 10);
  for (auto _ : state) benchmark::DoNotOptimize(MstKernel(x, core));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void covariance(benchmark::State& state) {
  RowMatrix x = random_points(state.range(0), 256);
  x.rowwise() -= x.colwise().mean();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void embed(benchmark::State& state) {
  const auto docs = texts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(docs, 256, 128));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void nearest(benchmark::State& state) {
  const auto x = random_points(state.range(0), 5);
  const auto centroids = random_points(72, 5);
  RowMatrix dist;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(x, centroids, dist));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(core_distances<kernels::serial::core_distances>)->Name("core_distances/serial")->Arg(1000)->Arg(4000);
BENCHMARK(core_distances<kernels::parallel::core_distances>)->Name("core_distances/parallel")->Arg(1000)->Arg(4000);
BENCHMARK(mst<kernels::serial::core_distances, kernels::serial::mutual_reachability_mst>)
    ->Name("mst/serial")->Arg(1000)->Arg(4000);
BENCHMARK(mst<kernels::parallel::core_distances, kernels::parallel::mutual_reachability_mst>)
    ->Name("mst/parallel")->Arg(1000)->Arg(4000);
BENCHMARK(covariance<kernels::serial::covariance>)->Name("covariance/serial")->Arg(2000);
BENCHMARK(covariance<kernels::parallel::covariance>)->Name("covariance/parallel")->Arg(2000);
BENCHMARK(embed<kernels::serial::hashed_trigram_embed>)->Name("embed/serial")->Arg(1000);
BENCHMARK(embed<kernels::parallel::hashed_trigram_embed>)->Name("embed/parallel")->Arg(1000);
BENCHMARK(nearest<kernels::serial::nearest_centroids>)->Name("nearest_centroids/serial")->Arg(10000);
BENCHMARK(nearest<kernels::parallel::nearest_centroids>)->Name("nearest_centroids/parallel")->Arg(10000);

BENCHMARK_MAIN();
