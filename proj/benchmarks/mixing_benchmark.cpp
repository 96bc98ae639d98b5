// Microbenchmark comparing the Fourier mixing kernel against multi-head
// attention across sequence lengths, at the summarization model's width.
#include <benchmark/benchmark.h>

#include "fnetsum/attention.hpp"
#include "fnetsum/common.hpp"
#include "fnetsum/fourier.hpp"
#include "fnetsum/tensor.hpp"

namespace {

constexpr std::size_t kWidth = 200;
constexpr std::size_t kHeads = 20;

fnetsum::Tensor make_input(std::size_t len) {
    fnetsum::Rng rng(42);
    return fnetsum::normal_init({len, kWidth}, 1.0, rng);
}

void BM_FourierMix(benchmark::State& state) {
    const auto len = static_cast<std::size_t>(state.range(0));
    fnetsum::Tensor x = make_input(len);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fnetsum::fourier_mix(x, kHeads, fnetsum::FourierComponent::kReal, false));
    }
    state.SetComplexityN(state.range(0));
}

void BM_CausalFourierMix(benchmark::State& state) {
    const auto len = static_cast<std::size_t>(state.range(0));
    fnetsum::Tensor x = make_input(len);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fnetsum::fourier_mix(x, kHeads, fnetsum::FourierComponent::kReal, true));
    }
    state.SetComplexityN(state.range(0));
}

void BM_Attention(benchmark::State& state) {
    const auto len = static_cast<std::size_t>(state.range(0));
    fnetsum::Tensor x = make_input(len);
    fnetsum::Rng rng(7);
    fnetsum::AttentionParams params = fnetsum::make_attention_params(kWidth, kHeads, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fnetsum::multi_head_attention(x, x, params, false));
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_FourierMix)->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK(BM_CausalFourierMix)->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK(BM_Attention)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

BENCHMARK_MAIN();
