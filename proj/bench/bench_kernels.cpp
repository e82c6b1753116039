#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gx/datasets.hpp"
#include "gx/gnn.hpp"
#include "gx/kernels.hpp"

namespace k = gx::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Batched adjacency x features, the dominant GNN product: nb graphs of n nodes, width c.
template <bool Parallel>
void bm_bmm(benchmark::State& st) {
  const int nb = static_cast<int>(st.range(0)), n = static_cast<int>(st.range(1)), c = 32;
  auto a = random_vec(static_cast<std::size_t>(nb) * n * n, 1);
  auto b = random_vec(static_cast<std::size_t>(nb) * n * c, 2);
  std::vector<double> out(static_cast<std::size_t>(nb) * n * c);
  for (auto _ : st) {
    if constexpr (Parallel)
      k::parallel::bmm(nb, n, n, c, a.data(), b.data(), out.data(), false);
    else
      k::serial::bmm(nb, n, n, c, a.data(), b.data(), out.data(), false);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(nb) * n * n * c);
}

template <bool Parallel>
void bm_softmax(benchmark::State& st) {
  const int rows = static_cast<int>(st.range(0)), cols = 8;
  auto a = random_vec(static_cast<std::size_t>(rows) * cols, 3);
  std::vector<double> out(a.size());
  for (auto _ : st) {
    if constexpr (Parallel)
      k::parallel::softmax_rows(rows, cols, a.data(), out.data());
    else
      k::serial::softmax_rows(rows, cols, a.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * rows * cols);
}

template <bool Parallel>
void bm_tanh(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  auto a = random_vec(n, 4);
  std::vector<double> out(n);
  for (auto _ : st) {
    if constexpr (Parallel)
      k::parallel::tanh(n, a.data(), out.data());
    else
      k::serial::tanh(n, a.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}

void bm_gnn_forward(benchmark::State& st) {
  gx::ShapeConfig sc;
  sc.graphs_per_class = 16;
  auto ds = gx::gen_shape_dataset(sc, 1);
  gx::GnnArch arch;
  arch.outputs = 4;
  gx::GnnModel model(arch, 2);
  model.set_trainable(false);
  for (auto _ : st) {
    auto ev = gx::evaluate_graphs(model, ds.graphs, static_cast<int>(st.range(0)));
    benchmark::DoNotOptimize(ev.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(ds.graphs.size()));
}

}  // namespace

BENCHMARK(bm_bmm<false>)->Name("bmm/serial")->Args({16, 16})->Args({32, 24})->Args({64, 32});
BENCHMARK(bm_bmm<true>)->Name("bmm/parallel")->Args({16, 16})->Args({32, 24})->Args({64, 32});
BENCHMARK(bm_softmax<false>)->Name("softmax_rows/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(bm_softmax<true>)->Name("softmax_rows/parallel")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(bm_tanh<false>)->Name("tanh/serial")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(bm_tanh<true>)->Name("tanh/parallel")->Arg(1 << 14)->Arg(1 << 20);
BENCHMARK(bm_gnn_forward)->Name("gnn_forward/chunk")->Arg(8)->Arg(64);

BENCHMARK_MAIN();
