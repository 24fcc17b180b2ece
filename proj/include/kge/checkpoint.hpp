#pragma once

#include <cstdint>
#include <string>

#include "kge/model.hpp"

namespace kge {

struct Checkpoint {
    Model model;
    std::uint64_t vocab_hash = 0;
    int epochs = 0;
};

// One JSON header line (model kind, dims, vocab hash) followed by the entity
// and relation tables as raw little-endian 64-bit floats, row-major.
void save_checkpoint(const std::string& path, const Model& model, std::uint64_t vocab_hash,
                     int epochs);

Checkpoint load_checkpoint(const std::string& path);

// load + vocab fingerprint validation
Model load_checkpoint_for(const std::string& path, std::uint64_t expected_vocab_hash);

}  // namespace kge
