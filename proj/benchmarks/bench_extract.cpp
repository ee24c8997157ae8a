#include <random>

#include <benchmark/benchmark.h>

#include "sso/extract.hpp"
#include "support/fixtures.hpp"

using namespace sso;

static void BM_ExtractCandidates(benchmark::State& state) {
    std::mt19937_64 rng(7);
    TestEmbedder te;
    EmbeddingCache cache(te);
    TrajectoryStore store;
    std::vector<const Trajectory*> archive;
    const auto steps = static_cast<std::size_t>(state.range(0));
    for (int i = 0; i < 5; ++i)
        archive.push_back(&store.add(sso::testing::random_trajectory(rng, "p" + std::to_string(i), steps)));
    const auto& latest = store.add(sso::testing::random_trajectory(rng, "latest", steps));
    const SSOConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(extract_candidates(latest, archive, config, store, cache));
}
BENCHMARK(BM_ExtractCandidates)->Arg(12)->Arg(40);
