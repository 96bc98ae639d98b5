#include "fnetsum/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "binio.hpp"

namespace fnetsum {

ModelVariant parse_variant(std::string_view name) {
    if (name == "fnet") return ModelVariant::kFnetTransformer;
    if (name == "hybrid") return ModelVariant::kHybridFnet;
    if (name == "fourier") return ModelVariant::kFourierFnet;
    throw ConfigError("unknown variant '" + std::string(name) +
                      "', expected fnet, hybrid, or fourier");
}

std::string_view variant_name(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::kFnetTransformer: return "fnet";
        case ModelVariant::kHybridFnet: return "hybrid";
        case ModelVariant::kFourierFnet: return "fourier";
    }
    throw ConfigError("invalid variant value");
}

void ModelConfig::validate() const {
    if (d_model == 0) throw ConfigError("d_model must be positive");
    if (d_ff == 0) throw ConfigError("d_ff must be positive");
    if (mixing_heads == 0 || d_model % mixing_heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) + " must be divisible by " +
                          std::to_string(mixing_heads) + " mixing heads");
    }
    if (layers < 1 || layers > 6) {
        throw ConfigError("layers must lie in 1..6, got " + std::to_string(layers));
    }
    if (vocab_size < 4) {
        throw ConfigError("vocab_size must cover the four reserved ids, got " +
                          std::to_string(vocab_size));
    }
    if (max_src_len < 1) throw ConfigError("max_src_len must be positive");
    if (max_tgt_len < 3) throw ConfigError("max_tgt_len must be at least 3");
}

std::string ModelConfig::canonical_text() const {
    std::ostringstream out;
    out << "causal_rescale=" << (causal_rescale ? "on" : "off") << '\n'
        << "component=" << component_name(component) << '\n'
        << "d_ff=" << d_ff << '\n'
        << "d_model=" << d_model << '\n'
        << "layers=" << layers << '\n'
        << "max_src_len=" << max_src_len << '\n'
        << "max_tgt_len=" << max_tgt_len << '\n'
        << "mixing_heads=" << mixing_heads << '\n'
        << "seed=" << seed << '\n'
        << "variant=" << variant_name(variant) << '\n'
        << "vocab_size=" << vocab_size << '\n';
    return out.str();
}

ModelConfig parse_model_config(const std::string& canonical_text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(canonical_text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config line without '=': " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto take = [&kv](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(std::string("config missing key ") + key);
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_size = [&take](const char* key) {
        const std::string v = take(key);
        try {
            return static_cast<std::size_t>(std::stoull(v));
        } catch (const std::exception&) {
            throw ParseError(std::string("config key ") + key + " has non-integer value '" + v +
                             "'");
        }
    };
    ModelConfig cfg;
    try {
        const std::string rescale = take("causal_rescale");
        if (rescale != "on" && rescale != "off") {
            throw ParseError("config causal_rescale must be on or off, got '" + rescale + "'");
        }
        cfg.causal_rescale = rescale == "on";
        cfg.component = parse_component(take("component"));
        cfg.d_ff = take_size("d_ff");
        cfg.d_model = take_size("d_model");
        cfg.layers = take_size("layers");
        cfg.max_src_len = take_size("max_src_len");
        cfg.max_tgt_len = take_size("max_tgt_len");
        cfg.mixing_heads = take_size("mixing_heads");
        cfg.seed = static_cast<std::uint64_t>(std::stoull(take("seed")));
        cfg.variant = parse_variant(take("variant"));
        cfg.vocab_size = take_size("vocab_size");
    } catch (const ConfigError& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!kv.empty()) throw ParseError("config has unknown key '" + kv.begin()->first + "'");
    cfg.validate();
    return cfg;
}

Tensor sinusoidal_positions(std::size_t max_len, std::size_t d_model) {
    Tensor p = Tensor::zeros({max_len, d_model});
    for (std::size_t pos = 0; pos < max_len; ++pos) {
        for (std::size_t i = 0; i < d_model; i += 2) {
            const double rate =
                std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) / rate;
            p.at(pos, i) = std::sin(angle);
            if (i + 1 < d_model) p.at(pos, i + 1) = std::cos(angle);
        }
    }
    return p;
}

namespace {

FeedForward make_ffn(std::size_t d, std::size_t d_ff, Rng& rng) {
    FeedForward f;
    f.w1 = uniform_init({d, d_ff}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    f.b1 = Tensor::zeros({d_ff}, /*requires_grad=*/true);
    f.w2 = uniform_init({d_ff, d}, 1.0 / std::sqrt(static_cast<double>(d_ff)), rng);
    f.b2 = Tensor::zeros({d}, /*requires_grad=*/true);
    return f;
}

LayerNormParams make_norm(std::size_t d) {
    LayerNormParams n;
    n.gain = Tensor::ones({d}, /*requires_grad=*/true);
    n.bias = Tensor::zeros({d}, /*requires_grad=*/true);
    return n;
}

Tensor apply_ffn(const Tensor& x, const FeedForward& f) {
    Tensor hidden = relu(add_rowwise(matmul(x, f.w1), f.b1));
    return add_rowwise(matmul(hidden, f.w2), f.b2);
}

}  // namespace

Model Model::build(const ModelConfig& config, const PretrainedEmbeddings* pretrained) {
    config.validate();
    if (pretrained != nullptr) {
        if (pretrained->matrix.cols() != config.d_model) {
            throw ConfigError("pretrained embedding width " +
                              std::to_string(pretrained->matrix.cols()) +
                              " does not match d_model " + std::to_string(config.d_model));
        }
        if (pretrained->matrix.rows() != config.vocab_size) {
            throw ConfigError("pretrained embedding rows " +
                              std::to_string(pretrained->matrix.rows()) +
                              " do not match vocab_size " + std::to_string(config.vocab_size));
        }
    }
    Model m;
    m.config_ = config;
    Rng rng(config.seed);
    const std::size_t d = config.d_model;

    m.embedding_ = normal_init({config.vocab_size, d}, 0.02, rng);
    if (pretrained != nullptr) {
        for (std::size_t row = 0; row < config.vocab_size; ++row) {
            if (!pretrained->covered[row]) continue;
            for (std::size_t col = 0; col < d; ++col) {
                m.embedding_.at(row, col) = pretrained->matrix.at(row, col);
            }
        }
    }
    // FourierFnet pre-transforms the whole corpus up front, which is only
    // sound if the embedding never moves afterwards.
    if (config.variant == ModelVariant::kFourierFnet) {
        m.embedding_ = m.embedding_.detached_copy();
    }

    m.positions_ = sinusoidal_positions(std::max(config.max_src_len, config.max_tgt_len), d);

    for (std::size_t i = 0; i < config.layers; ++i) {
        EncoderBlock block;
        block.ffn = make_ffn(d, config.d_ff, rng);
        block.norm1 = make_norm(d);
        block.norm2 = make_norm(d);
        m.encoder_.push_back(std::move(block));
    }
    for (std::size_t i = 0; i < config.layers; ++i) {
        DecoderBlock block;
        if (config.variant == ModelVariant::kHybridFnet) {
            block.junction_attention = make_attention_params(d, config.mixing_heads, rng);
        }
        block.ffn = make_ffn(d, config.d_ff, rng);
        block.norm1 = make_norm(d);
        block.norm2 = make_norm(d);
        block.norm3 = make_norm(d);
        m.decoder_.push_back(std::move(block));
    }
    m.output_projection_ =
        uniform_init({d, config.vocab_size}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    return m;
}

Tensor Model::input_representation(const std::vector<TokenId>& ids, bool is_target) const {
    const std::size_t limit = is_target ? config_.max_tgt_len : config_.max_src_len;
    if (ids.empty() || ids.size() > limit) {
        throw DimensionError(std::string(is_target ? "target" : "source") + " length " +
                             std::to_string(ids.size()) + " outside 1.." + std::to_string(limit));
    }
    Tensor x = embedding_lookup(embedding_, ids);
    x = add(x, slice_rows(positions_, 0, ids.size()));
    if (config_.variant == ModelVariant::kFourierFnet) {
        // Causal transforms are pinned to max_tgt_len points so a decoder
        // prefix maps to the prefix of the full transform; greedy decoding
        // then reproduces teacher-forced activations step for step.
        x = fourier_mix(x, config_.mixing_heads, config_.component, /*causal=*/is_target,
                        config_.causal_rescale, is_target ? config_.max_tgt_len : 0);
    }
    return x;
}

Tensor Model::encode(const Tensor& src_input) const {
    // FourierFnet keeps its in-block mixing slots as fixed real matrices; the
    // configured component applies only to the outer transforms.
    const FourierComponent comp = config_.variant == ModelVariant::kFourierFnet
                                      ? FourierComponent::kReal
                                      : config_.component;
    Tensor x = src_input;
    for (const EncoderBlock& block : encoder_) {
        Tensor mixed = fourier_mix(x, config_.mixing_heads, comp, /*causal=*/false,
                                   config_.causal_rescale);
        x = layer_norm(add(x, mixed), block.norm1.gain, block.norm1.bias);
        x = layer_norm(add(x, apply_ffn(x, block.ffn)), block.norm2.gain, block.norm2.bias);
    }
    return x;
}

Tensor Model::decode(const Tensor& encoder_out, const Tensor& tgt_input) const {
    const FourierComponent comp = config_.variant == ModelVariant::kFourierFnet
                                      ? FourierComponent::kReal
                                      : config_.component;
    // All causal transforms run at a fixed point count (see
    // input_representation) so decoding a prefix reproduces the teacher-forced
    // activations exactly.
    Tensor y = tgt_input;
    for (const DecoderBlock& block : decoder_) {
        Tensor mixed = fourier_mix(y, config_.mixing_heads, comp, /*causal=*/true,
                                   config_.causal_rescale, config_.max_tgt_len);
        y = layer_norm(add(y, mixed), block.norm1.gain, block.norm1.bias);
        Tensor crossed;
        if (config_.variant == ModelVariant::kHybridFnet) {
            crossed = multi_head_attention(y, encoder_out, *block.junction_attention,
                                           /*causal_mask=*/false);
        } else {
            crossed = cross_mix(encoder_out, y, config_.mixing_heads, comp,
                                config_.causal_rescale,
                                encoder_out.rows() + config_.max_tgt_len);
        }
        y = layer_norm(add(y, crossed), block.norm2.gain, block.norm2.bias);
        y = layer_norm(add(y, apply_ffn(y, block.ffn)), block.norm3.gain, block.norm3.bias);
    }
    if (config_.variant == ModelVariant::kFourierFnet) {
        // The final outer Fourier module before the softmax; causal so the
        // generation contract survives.
        y = fourier_mix(y, config_.mixing_heads, config_.component, /*causal=*/true,
                        config_.causal_rescale, config_.max_tgt_len);
    }
    return y;
}

Tensor Model::forward_from_inputs(const Tensor& src_input, const Tensor& tgt_input) const {
    return matmul(decode(encode(src_input), tgt_input), output_projection_);
}

Tensor Model::forward_teacher_forced(const std::vector<TokenId>& src,
                                     const std::vector<TokenId>& tgt) const {
    if (tgt.empty()) throw DimensionError("forward_teacher_forced: empty target");
    for (TokenId id : tgt) {
        if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
            throw IndexError("forward_teacher_forced: target id " + std::to_string(id) +
                             " out of range for vocabulary of " +
                             std::to_string(config_.vocab_size));
        }
    }
    std::vector<TokenId> dec_ids;
    dec_ids.reserve(tgt.size());
    dec_ids.push_back(kBosId);
    dec_ids.insert(dec_ids.end(), tgt.begin(), tgt.end() - 1);
    return forward_from_inputs(input_representation(src, false),
                               input_representation(dec_ids, true));
}

std::vector<TokenId> Model::generate(const std::vector<TokenId>& src, std::size_t max_len) const {
    if (max_len < 1) throw ConfigError("generate: max_len must be at least 1");
    Tensor encoded = encode(input_representation(src, false));
    std::vector<TokenId> dec_ids{kBosId};
    std::vector<TokenId> out;
    while (out.size() < max_len && dec_ids.size() <= config_.max_tgt_len) {
        Tensor y = decode(encoded, input_representation(dec_ids, true));
        Tensor logits = matmul(y, output_projection_);
        const std::size_t last = logits.rows() - 1;
        TokenId best = 0;
        double best_score = logits.at(last, 0);
        for (std::size_t v = 1; v < config_.vocab_size; ++v) {
            const double s = logits.at(last, v);
            if (s > best_score) {
                best_score = s;
                best = static_cast<TokenId>(v);
            }
        }
        if (best == kEosId) break;
        out.push_back(best);
        dec_ids.push_back(best);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor>> Model::named_tensors() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("embedding", embedding_);
    auto add_ffn = [&out](const std::string& prefix, const FeedForward& f) {
        out.emplace_back(prefix + ".w1", f.w1);
        out.emplace_back(prefix + ".b1", f.b1);
        out.emplace_back(prefix + ".w2", f.w2);
        out.emplace_back(prefix + ".b2", f.b2);
    };
    auto add_norm = [&out](const std::string& prefix, const LayerNormParams& n) {
        out.emplace_back(prefix + ".gain", n.gain);
        out.emplace_back(prefix + ".bias", n.bias);
    };
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
        const std::string p = "encoder." + std::to_string(i);
        add_ffn(p + ".ffn", encoder_[i].ffn);
        add_norm(p + ".norm1", encoder_[i].norm1);
        add_norm(p + ".norm2", encoder_[i].norm2);
    }
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
        const std::string p = "decoder." + std::to_string(i);
        if (decoder_[i].junction_attention) {
            out.emplace_back(p + ".attn.w_q", decoder_[i].junction_attention->w_q);
            out.emplace_back(p + ".attn.w_k", decoder_[i].junction_attention->w_k);
            out.emplace_back(p + ".attn.w_v", decoder_[i].junction_attention->w_v);
            out.emplace_back(p + ".attn.w_o", decoder_[i].junction_attention->w_o);
        }
        add_ffn(p + ".ffn", decoder_[i].ffn);
        add_norm(p + ".norm1", decoder_[i].norm1);
        add_norm(p + ".norm2", decoder_[i].norm2);
        add_norm(p + ".norm3", decoder_[i].norm3);
    }
    out.emplace_back("output.w", output_projection_);
    return out;
}

std::vector<Tensor> Model::trainable_parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, tensor] : named_tensors()) {
        if (tensor.requires_grad()) out.push_back(tensor);
    }
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor& t : trainable_parameters()) n += t.size();
    return n;
}

namespace {

constexpr char kPrecomputeMagic[9] = "FNSUMFPC";
constexpr std::uint32_t kPrecomputeVersion = 1;

bool try_load_precompute(const std::string& path, std::uint64_t config_hash,
                         const std::vector<Example>& examples, std::size_t d,
                         FourierPrecompute& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    try {
        char magic[8];
        if (!in.read(magic, 8) || std::string(magic, 8) != kPrecomputeMagic) return false;
        if (binio::read_u32(in, "version") != kPrecomputeVersion) return false;
        if (binio::read_u64(in, "config hash") != config_hash) return false;
        if (binio::read_u64(in, "example count") != examples.size()) return false;
        FourierPrecompute loaded;
        for (const Example& ex : examples) {
            for (int which = 0; which < 2; ++which) {
                const std::size_t expect_rows =
                    which == 0 ? ex.article.size() : ex.abstract.size() - 1;
                const std::uint64_t rows = binio::read_u64(in, "matrix rows");
                const std::uint64_t cols = binio::read_u64(in, "matrix cols");
                if (rows != expect_rows || cols != d) return false;
                Tensor t = Tensor::zeros({rows, cols});
                for (double& v : t.values()) v = binio::read_f64(in, "matrix entry");
                (which == 0 ? loaded.src_inputs : loaded.tgt_inputs).push_back(std::move(t));
            }
        }
        out = std::move(loaded);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

void save_precompute(const std::string& path, std::uint64_t config_hash,
                     const FourierPrecompute& pre) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write fourier cache '" + path + "'");
    out.write(kPrecomputeMagic, 8);
    binio::write_u32(out, kPrecomputeVersion);
    binio::write_u64(out, config_hash);
    binio::write_u64(out, pre.src_inputs.size());
    for (std::size_t i = 0; i < pre.src_inputs.size(); ++i) {
        for (const Tensor* t : {&pre.src_inputs[i], &pre.tgt_inputs[i]}) {
            binio::write_u64(out, t->rows());
            binio::write_u64(out, t->cols());
            for (double v : t->values()) binio::write_f64(out, v);
        }
    }
    if (!out) throw IoError("short write to fourier cache '" + path + "'");
}

}  // namespace

FourierPrecompute precompute_fourier_inputs(const Model& model,
                                            const std::vector<Example>& examples,
                                            const std::string& cache_dir) {
    if (model.config().variant != ModelVariant::kFourierFnet) {
        throw ConfigError("precompute_fourier_inputs: variant is " +
                          std::string(variant_name(model.config().variant)) +
                          ", expected fourier");
    }
    std::string cache_path;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        cache_path = (std::filesystem::path(cache_dir) /
                      ("fourier_cache_" + hex64(model.config().hash()) + ".bin"))
                         .string();
        FourierPrecompute cached;
        if (try_load_precompute(cache_path, model.config().hash(), examples,
                                model.config().d_model, cached)) {
            return cached;
        }
    }
    FourierPrecompute pre;
    pre.src_inputs.reserve(examples.size());
    pre.tgt_inputs.reserve(examples.size());
    for (const Example& ex : examples) {
        if (ex.abstract.size() < 2) {
            throw DimensionError("precompute_fourier_inputs: abstract shorter than its frame");
        }
        pre.src_inputs.push_back(model.input_representation(ex.article, false));
        std::vector<TokenId> dec_ids(ex.abstract.begin(), ex.abstract.end() - 1);
        pre.tgt_inputs.push_back(model.input_representation(dec_ids, true));
    }
    if (!cache_path.empty()) save_precompute(cache_path, model.config().hash(), pre);
    return pre;
}

}  // namespace fnetsum
