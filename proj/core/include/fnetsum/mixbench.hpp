#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace fnetsum {

struct MixingBenchRow {
    std::size_t seq_len = 0;
    double fourier_ms = 0.0;
    double attention_ms = 0.0;
};

/// Median wall-clock milliseconds of one invocation, after one warmup run.
double median_wall_ms(const std::function<void()>& fn, std::size_t repetitions);

/// Times one forward fourier_mix (non-causal) against one forward
/// multi_head_attention on the same random [len x d] input, per length.
std::vector<MixingBenchRow> mixing_bench(const std::vector<std::size_t>& seq_lengths,
                                         std::size_t d, std::size_t heads,
                                         std::size_t repetitions = 7);

/// CSV with header seq_len,fourier_ms,attention_ms.
std::string format_bench_csv(const std::vector<MixingBenchRow>& rows);

}  // namespace fnetsum
