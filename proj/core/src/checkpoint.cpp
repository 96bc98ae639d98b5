#include "fnetsum/checkpoint.hpp"

#include <fstream>

#include "binio.hpp"

namespace fnetsum {

namespace {

constexpr char kMagic[9] = "FNSUMCKP";
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab) {
    if (vocab.size() != model.config().vocab_size) {
        throw ConfigError("checkpoint: vocabulary size " + std::to_string(vocab.size()) +
                          " does not match config vocab_size " +
                          std::to_string(model.config().vocab_size));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, 8);
    binio::write_u32(out, kVersion);
    const std::string config_text = model.config().canonical_text();
    binio::write_string(out, config_text);
    binio::write_u64(out, fnv1a64(config_text));
    binio::write_u64(out, vocab.size());
    for (const std::string& token : vocab.tokens()) binio::write_string(out, token);
    const auto tensors = model.named_tensors();
    binio::write_u64(out, tensors.size());
    for (const auto& [name, tensor] : tensors) {
        binio::write_string(out, name);
        binio::write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t dim : tensor.shape()) binio::write_u64(out, dim);
        for (double v : tensor.values()) binio::write_f64(out, v);
    }
    if (!out) throw IoError("short write to checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[8];
    if (!in.read(magic, 8) || std::string(magic, 8) != kMagic) {
        throw ParseError("'" + path + "' is not a checkpoint file");
    }
    const std::uint32_t version = binio::read_u32(in, "version");
    if (version != kVersion) {
        throw ParseError("checkpoint version " + std::to_string(version) + " unsupported");
    }
    Checkpoint ckpt;
    ckpt.config_text = binio::read_string(in, "config text");
    const std::uint64_t stored_hash = binio::read_u64(in, "config hash");
    if (stored_hash != fnv1a64(ckpt.config_text)) {
        throw ParseError("checkpoint config hash mismatch: stored " + hex64(stored_hash) +
                         ", computed " + hex64(fnv1a64(ckpt.config_text)));
    }
    const std::uint64_t vocab_count = binio::read_u64(in, "vocab size");
    ckpt.vocab_tokens.reserve(vocab_count);
    for (std::uint64_t i = 0; i < vocab_count; ++i) {
        ckpt.vocab_tokens.push_back(binio::read_string(in, "vocab token"));
    }
    const std::uint64_t tensor_count = binio::read_u64(in, "tensor count");
    for (std::uint64_t i = 0; i < tensor_count; ++i) {
        const std::string name = binio::read_string(in, "tensor name");
        const std::uint32_t rank = binio::read_u32(in, "tensor rank");
        Shape shape(rank);
        for (std::uint32_t a = 0; a < rank; ++a) shape[a] = binio::read_u64(in, "tensor dim");
        Tensor t = Tensor::zeros(shape);
        for (double& v : t.values()) v = binio::read_f64(in, "tensor value");
        ckpt.tensors.emplace_back(name, std::move(t));
    }
    return ckpt;
}

namespace {

void copy_tensors_into(Model& model, const Checkpoint& ckpt) {
    auto targets = model.named_tensors();
    if (targets.size() != ckpt.tensors.size()) {
        throw ParseError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                         " tensors, model expects " + std::to_string(targets.size()));
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto& [expect_name, target] = targets[i];
        const auto& [name, source] = ckpt.tensors[i];
        if (name != expect_name) {
            throw ParseError("checkpoint tensor '" + name + "' where '" + expect_name +
                             "' was expected");
        }
        if (source.shape() != target.shape()) {
            throw ParseError("checkpoint tensor '" + name + "' has shape " +
                             shape_str(source.shape()) + ", model expects " +
                             shape_str(target.shape()));
        }
        std::copy(source.values().begin(), source.values().end(), target.values().begin());
    }
}

}  // namespace

Model restore_model(const Checkpoint& checkpoint, Vocabulary& vocab_out) {
    const ModelConfig config = parse_model_config(checkpoint.config_text);
    if (checkpoint.vocab_tokens.size() != config.vocab_size) {
        throw ParseError("checkpoint vocabulary size " +
                         std::to_string(checkpoint.vocab_tokens.size()) +
                         " does not match config vocab_size " +
                         std::to_string(config.vocab_size));
    }
    Vocabulary vocab;
    for (std::size_t i = 0; i < checkpoint.vocab_tokens.size(); ++i) {
        const std::string& token = checkpoint.vocab_tokens[i];
        if (static_cast<std::size_t>(vocab.add(token)) != i) {
            throw ParseError("checkpoint vocabulary entry " + std::to_string(i) + " ('" + token +
                             "') is out of order or duplicated");
        }
    }
    Model model = Model::build(config);
    copy_tensors_into(model, checkpoint);
    vocab_out = std::move(vocab);
    return model;
}

void load_weights(Model& model, const Checkpoint& checkpoint) {
    if (checkpoint.config_text != model.config().canonical_text()) {
        throw ConfigError("checkpoint config does not match the model's config (hash " +
                          hex64(fnv1a64(checkpoint.config_text)) + " vs " +
                          hex64(model.config().hash()) + ")");
    }
    copy_tensors_into(model, checkpoint);
}

}  // namespace fnetsum
