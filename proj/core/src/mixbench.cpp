#include "fnetsum/mixbench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "fnetsum/attention.hpp"
#include "fnetsum/common.hpp"
#include "fnetsum/fourier.hpp"
#include "fnetsum/tensor.hpp"

namespace fnetsum {

double median_wall_ms(const std::function<void()>& fn, std::size_t repetitions) {
    if (repetitions < 5) throw ConfigError("benchmark needs at least 5 repetitions");
    fn();  // warmup
    std::vector<double> samples;
    samples.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    std::size_t mid = samples.size() / 2;
    if (samples.size() % 2 == 1) return samples[mid];
    return 0.5 * (samples[mid - 1] + samples[mid]);
}

std::vector<MixingBenchRow> mixing_bench(const std::vector<std::size_t>& seq_lengths,
                                         std::size_t d, std::size_t heads,
                                         std::size_t repetitions) {
    Rng rng(42);
    AttentionParams params = make_attention_params(d, heads, rng);
    std::vector<MixingBenchRow> rows;
    rows.reserve(seq_lengths.size());
    for (std::size_t len : seq_lengths) {
        if (len == 0) throw ConfigError("benchmark sequence length must be positive");
        Tensor x = normal_init({len, d}, 1.0, rng);
        MixingBenchRow row;
        row.seq_len = len;
        row.fourier_ms = median_wall_ms(
            [&] { fourier_mix(x, heads, FourierComponent::kReal, /*causal=*/false); },
            repetitions);
        row.attention_ms = median_wall_ms(
            [&] { multi_head_attention(x, x, params, /*causal_mask=*/false); },
            repetitions);
        rows.push_back(row);
    }
    return rows;
}

std::string format_bench_csv(const std::vector<MixingBenchRow>& rows) {
    std::string out = "seq_len,fourier_ms,attention_ms\n";
    char buf[128];
    for (const MixingBenchRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", row.seq_len, row.fourier_ms,
                      row.attention_ms);
        out += buf;
    }
    return out;
}

}  // namespace fnetsum
