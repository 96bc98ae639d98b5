#include "fnetsum/fourier.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

namespace fnetsum {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNormEps = 1e-12;

}  // namespace

ComplexMatrix dft_matrix(std::size_t n) {
    ComplexMatrix w;
    w.n = n;
    w.re.assign(n * n, 0.0);
    w.im.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            // Reducing j*k mod n keeps the argument small, which keeps the
            // trig evaluation accurate for large n.
            const double angle = -kTwoPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            w.re[j * n + k] = std::cos(angle);
            w.im[j * n + k] = std::sin(angle);
        }
    }
    return w;
}

ComplexMatrix causal_dft_matrix(std::size_t n, bool rescale) {
    ComplexMatrix w = dft_matrix(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double row_scale =
            rescale ? static_cast<double>(n) / static_cast<double>(j + 1) : 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k > j) {
                w.re[j * n + k] = 0.0;
                w.im[j * n + k] = 0.0;
            } else {
                w.re[j * n + k] *= row_scale;
                w.im[j * n + k] *= row_scale;
            }
        }
    }
    return w;
}

namespace {

std::shared_mutex g_dft_cache_mutex;
std::map<std::pair<std::size_t, DftKind>, std::unique_ptr<ComplexMatrix>> g_dft_cache;

ComplexMatrix build_dft(std::size_t n, DftKind kind) {
    switch (kind) {
        case DftKind::kPlain: return dft_matrix(n);
        case DftKind::kCausal: return causal_dft_matrix(n, true);
        case DftKind::kCausalNoRescale: return causal_dft_matrix(n, false);
    }
    throw ConfigError("invalid DFT kind value");
}

}  // namespace

const ComplexMatrix& cached_dft_matrix(std::size_t n, DftKind kind) {
    const auto key = std::make_pair(n, kind);
    {
        std::shared_lock lock(g_dft_cache_mutex);
        auto it = g_dft_cache.find(key);
        if (it != g_dft_cache.end()) return *it->second;
    }
    auto fresh = std::make_unique<ComplexMatrix>(build_dft(n, kind));
    std::unique_lock lock(g_dft_cache_mutex);
    auto [it, inserted] = g_dft_cache.try_emplace(key, std::move(fresh));
    return *it->second;
}

namespace {

// Radix-2 Cooley-Tukey on strided complex data; n must be a power of two.
void fft_pow2_strided(double* re, double* im, std::size_t n, std::size_t stride) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i * stride], re[j * stride]);
            std::swap(im[i * stride], im[j * stride]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double base = -kTwoPi / static_cast<double>(len);
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const double angle = base * static_cast<double>(k);
                const double wr = std::cos(angle), wi = std::sin(angle);
                const std::size_t a = (start + k) * stride;
                const std::size_t b = (start + k + len / 2) * stride;
                const double tr = wr * re[b] - wi * im[b];
                const double ti = wr * im[b] + wi * re[b];
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

// y = x * M for one complex row vector x of length n (y[k] = sum_j x[j] M[j,k]).
void apply_matrix_row(const ComplexMatrix& m, const double* xr, const double* xi, double* yr,
                      double* yi) {
    const std::size_t n = m.n;
    for (std::size_t k = 0; k < n; ++k) {
        yr[k] = 0.0;
        yi[k] = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double ar = xr[j], ai = xi[j];
        if (ar == 0.0 && ai == 0.0) continue;
        const double* mr = m.re.data() + j * n;
        const double* mi = m.im.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) {
            yr[k] += ar * mr[k] - ai * mi[k];
            yi[k] += ar * mi[k] + ai * mr[k];
        }
    }
}

// In-place DFT of every row of an r x c complex array.
void dft_rows(std::vector<double>& re, std::vector<double>& im, std::size_t r, std::size_t c) {
    if (c <= 1) return;
    if (is_power_of_two(c)) {
        for (std::size_t i = 0; i < r; ++i) fft_pow2_strided(re.data() + i * c, im.data() + i * c, c, 1);
        return;
    }
    const ComplexMatrix& m = cached_dft_matrix(c, DftKind::kPlain);
    std::vector<double> tr(c), ti(c);
    for (std::size_t i = 0; i < r; ++i) {
        apply_matrix_row(m, re.data() + i * c, im.data() + i * c, tr.data(), ti.data());
        std::copy(tr.begin(), tr.end(), re.begin() + i * c);
        std::copy(ti.begin(), ti.end(), im.begin() + i * c);
    }
}

// In-place transform along the columns of an r x c complex array: Y = M * X,
// where M is the top-left r x r block of the points-point DFT matrix of the
// given kind, optionally transposed. points == r except for the causal
// prefix-stable case, where the block of a larger masked matrix is applied.
void dft_cols(std::vector<double>& re, std::vector<double>& im, std::size_t r, std::size_t c,
              DftKind kind, bool transposed, std::size_t points) {
    const bool causal = kind != DftKind::kPlain;
    if (r <= 1 && !causal) return;
    if (!causal && is_power_of_two(r)) {
        // The plain DFT matrix is symmetric, so the transposed flag is moot.
        for (std::size_t j = 0; j < c; ++j) fft_pow2_strided(re.data() + j, im.data() + j, r, c);
        return;
    }
    const ComplexMatrix& m = cached_dft_matrix(points, kind);
    std::vector<double> yr(r * c, 0.0), yi(r * c, 0.0);
    for (std::size_t k = 0; k < r; ++k) {
        const double* xr = re.data() + k * c;
        const double* xi = im.data() + k * c;
        for (std::size_t j = 0; j < r; ++j) {
            const double mr = transposed ? m.real(k, j) : m.real(j, k);
            const double mi = transposed ? m.imag(k, j) : m.imag(j, k);
            if (mr == 0.0 && mi == 0.0) continue;
            double* orow = yr.data() + j * c;
            double* oimr = yi.data() + j * c;
            for (std::size_t col = 0; col < c; ++col) {
                orow[col] += mr * xr[col] - mi * xi[col];
                oimr[col] += mr * xi[col] + mi * xr[col];
            }
        }
    }
    re = std::move(yr);
    im = std::move(yi);
}

// 2D transform of one head slice: hidden axis first, then sequence axis.
void head_transform(std::vector<double>& re, std::vector<double>& im, std::size_t seq,
                    std::size_t width, DftKind seq_kind, bool transposed,
                    std::size_t seq_points) {
    dft_rows(re, im, seq, width);
    dft_cols(re, im, seq, width, seq_kind, transposed, seq_points);
}

}  // namespace

void fft(std::vector<double>& re, std::vector<double>& im) {
    if (re.size() != im.size()) {
        throw DimensionError("fft: real part has " + std::to_string(re.size()) +
                             " entries, imaginary part " + std::to_string(im.size()));
    }
    dft_rows(re, im, 1, re.size());
}

FourierComponent parse_component(std::string_view name) {
    if (name == "real") return FourierComponent::kReal;
    if (name == "imag") return FourierComponent::kImag;
    if (name == "norm") return FourierComponent::kNorm;
    throw ConfigError("unknown fourier component '" + std::string(name) +
                      "', expected real, imag, or norm");
}

std::string_view component_name(FourierComponent component) {
    switch (component) {
        case FourierComponent::kReal: return "real";
        case FourierComponent::kImag: return "imag";
        case FourierComponent::kNorm: return "norm";
    }
    throw ConfigError("invalid fourier component value");
}

Tensor fourier_mix(const Tensor& x, std::size_t heads, FourierComponent component, bool causal,
                   bool causal_rescale, std::size_t seq_points) {
    if (x.rank() != 2) {
        throw DimensionError("fourier_mix: expected rank-2 input, got shape " +
                             shape_str(x.shape()));
    }
    if (heads == 0 || x.cols() % heads != 0) {
        throw ConfigError("fourier_mix: hidden width " + std::to_string(x.cols()) +
                          " not divisible into " + std::to_string(heads) + " heads");
    }
    if (seq_points != 0) {
        if (!causal) throw ConfigError("fourier_mix: seq_points requires causal mixing");
        if (seq_points < x.rows()) {
            throw ConfigError("fourier_mix: seq_points " + std::to_string(seq_points) +
                              " shorter than the sequence (" + std::to_string(x.rows()) + ")");
        }
    }
    const DftKind seq_kind = causal
                                 ? (causal_rescale ? DftKind::kCausal : DftKind::kCausalNoRescale)
                                 : DftKind::kPlain;
    const std::size_t seq = x.rows(), d = x.cols(), dh = d / heads;
    const std::size_t points = seq_points == 0 ? seq : seq_points;
    std::vector<double> out(seq * d);
    // Saved for the norm backward rule; real/imag do not need them.
    std::vector<double> saved_re, saved_im;
    const bool need_saved = component == FourierComponent::kNorm;
    if (need_saved) {
        saved_re.resize(seq * d);
        saved_im.resize(seq * d);
    }
    std::vector<double> hr(seq * dh), hi(seq * dh);
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < seq; ++i)
            for (std::size_t j = 0; j < dh; ++j) {
                hr[i * dh + j] = x.values()[i * d + h * dh + j];
                hi[i * dh + j] = 0.0;
            }
        head_transform(hr, hi, seq, dh, seq_kind, false, points);
        for (std::size_t i = 0; i < seq; ++i)
            for (std::size_t j = 0; j < dh; ++j) {
                const double vr = hr[i * dh + j], vi = hi[i * dh + j];
                const std::size_t idx = i * d + h * dh + j;
                switch (component) {
                    case FourierComponent::kReal: out[idx] = vr; break;
                    case FourierComponent::kImag: out[idx] = vi; break;
                    case FourierComponent::kNorm:
                        out[idx] = std::sqrt(vr * vr + vi * vi + kNormEps);
                        saved_re[idx] = vr;
                        saved_im[idx] = vi;
                        break;
                }
            }
    }
    const bool track = x.requires_grad() && Tape::active() != nullptr;
    Tensor result = Tensor::from({seq, d}, std::move(out), track);
    if (track) {
        Tape::active()->record([x, result, heads, component, seq_kind, seq, d, dh, points,
                                saved_re = std::move(saved_re),
                                saved_im = std::move(saved_im)]() mutable {
            auto dx = x.grad();
            const double* dy = result.grad().data();
            const double* y = result.values().data();
            std::vector<double> gr(seq * dh), gi(seq * dh);
            for (std::size_t h = 0; h < heads; ++h) {
                for (std::size_t i = 0; i < seq; ++i)
                    for (std::size_t j = 0; j < dh; ++j) {
                        const std::size_t idx = i * d + h * dh + j;
                        switch (component) {
                            case FourierComponent::kReal:
                                gr[i * dh + j] = dy[idx];
                                gi[i * dh + j] = 0.0;
                                break;
                            case FourierComponent::kImag:
                                gr[i * dh + j] = dy[idx];
                                gi[i * dh + j] = 0.0;
                                break;
                            case FourierComponent::kNorm: {
                                // d|z| propagates into both parts of z; feeding
                                // (d_re, -d_im) and keeping the real output of
                                // the transposed transform sums both paths.
                                const double inv = 1.0 / y[idx];
                                gr[i * dh + j] = dy[idx] * saved_re[idx] * inv;
                                gi[i * dh + j] = -dy[idx] * saved_im[idx] * inv;
                                break;
                            }
                        }
                    }
                head_transform(gr, gi, seq, dh, seq_kind, true, points);
                for (std::size_t i = 0; i < seq; ++i)
                    for (std::size_t j = 0; j < dh; ++j) {
                        const std::size_t idx = i * d + h * dh + j;
                        switch (component) {
                            case FourierComponent::kReal:
                            case FourierComponent::kNorm:
                                dx[idx] += gr[i * dh + j];
                                break;
                            case FourierComponent::kImag:
                                dx[idx] += gi[i * dh + j];
                                break;
                        }
                    }
            }
        });
    }
    return result;
}

Tensor cross_mix(const Tensor& encoder_states, const Tensor& decoder_states, std::size_t heads,
                 FourierComponent component, bool causal_rescale, std::size_t seq_points) {
    if (encoder_states.rank() != 2 || decoder_states.rank() != 2 ||
        encoder_states.cols() != decoder_states.cols()) {
        throw DimensionError("cross_mix: incompatible shapes " +
                             shape_str(encoder_states.shape()) + " and " +
                             shape_str(decoder_states.shape()));
    }
    Tensor joined = concat_rows(encoder_states, decoder_states);
    Tensor mixed =
        fourier_mix(joined, heads, component, /*causal=*/true, causal_rescale, seq_points);
    return slice_rows(mixed, encoder_states.rows(), joined.rows());
}

}  // namespace fnetsum
