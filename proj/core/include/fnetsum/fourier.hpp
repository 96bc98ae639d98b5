#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "fnetsum/tensor.hpp"

namespace fnetsum {

/// Dense n x n complex matrix, row-major, split into real and imaginary parts.
struct ComplexMatrix {
    std::size_t n = 0;
    std::vector<double> re;
    std::vector<double> im;

    double real(std::size_t j, std::size_t k) const { return re[j * n + k]; }
    double imag(std::size_t j, std::size_t k) const { return im[j * n + k]; }
};

/// Unnormalized forward DFT matrix: W[j,k] = exp(-2*pi*i*j*k/n).
ComplexMatrix dft_matrix(std::size_t n);

/// DFT matrix with the strict upper triangle zeroed (entry [j,k] removed for
/// k > j) and, when rescale is on, row j multiplied by n/(j+1) so each prefix
/// is transformed at full strength while never seeing later positions.
ComplexMatrix causal_dft_matrix(std::size_t n, bool rescale = true);

/// Which DFT operator a mixing layer applies along the sequence axis.
enum class DftKind { kPlain, kCausal, kCausalNoRescale };

/// Process-wide cache of the matrix families, safe for concurrent reads.
const ComplexMatrix& cached_dft_matrix(std::size_t n, DftKind kind);

/// Forward DFT of a complex sequence, in place. Uses an iterative radix-2
/// FFT for power-of-two lengths and the direct matrix transform otherwise.
void fft(std::vector<double>& re, std::vector<double>& im);

/// Which part of the complex mixing output feeds the rest of the network.
enum class FourierComponent { kReal, kImag, kNorm };

FourierComponent parse_component(std::string_view name);
std::string_view component_name(FourierComponent component);

/// Token-mixing layer: splits the hidden axis into `heads` equal slices and,
/// per slice, applies a DFT along the hidden axis and a (optionally causal)
/// DFT along the sequence axis, then keeps the requested component.
/// x is [seq_len x d_model]; the result has the same shape.
///
/// seq_points (causal only) fixes the length of the DFT whose masked matrix
/// is applied: the top-left seq_len x seq_len block of the seq_points-point
/// causal matrix. Row j then carries the same weights no matter how much of
/// the sequence is present, so transforming a prefix yields exactly the
/// prefix of the transform — the property incremental greedy decoding needs.
/// 0 means seq_points = seq_len.
Tensor fourier_mix(const Tensor& x, std::size_t heads, FourierComponent component, bool causal,
                   bool causal_rescale = true, std::size_t seq_points = 0);

/// Encoder/decoder junction: stacks encoder states on top of decoder states,
/// runs a causal fourier_mix over the combined sequence, and returns the
/// decoder rows. Every decoder position sees the whole source and its own
/// target prefix, never later target positions. seq_points as in fourier_mix,
/// counted over the combined sequence.
Tensor cross_mix(const Tensor& encoder_states, const Tensor& decoder_states, std::size_t heads,
                 FourierComponent component, bool causal_rescale = true,
                 std::size_t seq_points = 0);

}  // namespace fnetsum
