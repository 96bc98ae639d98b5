#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fnetsum/data.hpp"
#include "fnetsum/model.hpp"

namespace fnetsum {

/// On-disk model snapshot: magic + version, the model config as canonical
/// text plus its hash, the vocabulary, and every named tensor as
/// little-endian doubles.
struct Checkpoint {
    std::string config_text;
    std::vector<std::string> vocab_tokens;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab);

/// Reads and integrity-checks a checkpoint file; a config hash that does not
/// match the stored config text raises ParseError.
Checkpoint read_checkpoint(const std::string& path);

/// Rebuilds the model and vocabulary a checkpoint was saved from. Tensor
/// names or shapes that disagree with the rebuilt structure raise ParseError.
Model restore_model(const Checkpoint& checkpoint, Vocabulary& vocab_out);

/// Copies a checkpoint's tensor values into an already-built model whose
/// config must match exactly (ConfigError otherwise). Used to resume
/// training.
void load_weights(Model& model, const Checkpoint& checkpoint);

}  // namespace fnetsum
