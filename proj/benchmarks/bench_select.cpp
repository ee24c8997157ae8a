#include <random>

#include <benchmark/benchmark.h>

#include "sso/select.hpp"
#include "support/fixtures.hpp"

using namespace sso;

static void BM_BeamSample(benchmark::State& state) {
    std::mt19937_64 rng(11);
    const auto pairs = sso::testing::random_pairs(rng, 12);
    SSOConfig config;
    config.beam_width = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_skill_pairs(pairs, {}, config));
}
BENCHMARK(BM_BeamSample)->Arg(1)->Arg(4)->Arg(12);
