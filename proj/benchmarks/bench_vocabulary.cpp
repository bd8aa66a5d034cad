#include <benchmark/benchmark.h>

#include "semslam/rng.hpp"
#include "semslam/vocabulary.hpp"

using namespace semslam;

namespace {

std::vector<BinaryDescriptor> random_descriptors(int count, Rng& rng) {
  std::vector<BinaryDescriptor> out(static_cast<std::size_t>(count));
  for (auto& d : out) {
    for (auto& w : d.words) w = rng.next_u64();
  }
  return out;
}

const VocabularyTree& default_tree() {
  static const VocabularyTree tree = [] {
    Rng rng(1);
    std::vector<VocabularyTree::Document> documents;
    for (int doc = 0; doc < 40; ++doc) {
      documents.push_back(random_descriptors(128, rng));
    }
    return VocabularyTree::build(documents, 5, 5, 9, 0);
  }();
  return tree;
}

void bm_hamming(benchmark::State& state) {
  Rng rng(3);
  const auto a = random_descriptors(1, rng)[0];
  const auto b = random_descriptors(1, rng)[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(hamming(a, b));
  }
}
BENCHMARK(bm_hamming);

void bm_transform(benchmark::State& state) {
  Rng rng(5);
  const auto descriptors =
      random_descriptors(static_cast<int>(state.range(0)), rng);
  const VocabularyTree& tree = default_tree();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.transform(descriptors));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_transform)->Arg(32)->Arg(128);

void bm_l1_score(benchmark::State& state) {
  Rng rng(7);
  const VocabularyTree& tree = default_tree();
  const BowVector a = tree.transform(random_descriptors(32, rng));
  const BowVector b = tree.transform(random_descriptors(32, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(l1_score(a, b));
  }
}
BENCHMARK(bm_l1_score);

}  // namespace

BENCHMARK_MAIN();
