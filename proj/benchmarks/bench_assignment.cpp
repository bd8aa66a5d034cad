#include <benchmark/benchmark.h>

#include "semslam/association.hpp"
#include "semslam/rng.hpp"

using namespace semslam;

namespace {

ScoreMatrix random_matrix(std::size_t rows, std::size_t cols,
                          std::uint64_t seed) {
  Rng rng(seed);
  ScoreMatrix m;
  for (std::size_t r = 0; r < rows; ++r) m.measurement_indices.push_back(r);
  for (std::size_t c = 0; c < cols; ++c) {
    m.object_ids.push_back(static_cast<ObjectId>(c));
  }
  m.scores.assign(rows, std::vector<double>(cols, 0.0));
  m.present.assign(rows, std::vector<bool>(cols, false));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m.present[r][c] = rng.bernoulli(0.7);
      m.scores[r][c] = rng.uniform();
    }
  }
  return m;
}

void bm_solve_assignment(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const ScoreMatrix m = random_matrix(n, n, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_assignment(m));
  }
}
BENCHMARK(bm_solve_assignment)->Arg(4)->Arg(8)->Arg(12);

void bm_max_weight_matching(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n));
  std::vector<std::vector<bool>> allowed(n, std::vector<bool>(n, true));
  for (auto& row : w) {
    for (auto& v : row) v = static_cast<std::int64_t>(rng.uniform_index(1000000));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(max_weight_matching(w, allowed));
  }
}
BENCHMARK(bm_max_weight_matching)->Arg(8)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
