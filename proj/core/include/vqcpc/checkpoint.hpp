#pragma once
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>
#include <nlohmann/json.hpp>

namespace vqcpc {

// ============================================================================
// Single-file binary checkpoint container with a versioned header:
//   magic (8 bytes) | format version (u32) | header length (u64) |
//   JSON header (meta + tensor index) | raw little-endian tensor payloads.
// Tensors round-trip bit-exactly.
// ============================================================================

struct Checkpoint {
    nlohmann::json meta;
    std::map<std::string, torch::Tensor> tensors;

    const torch::Tensor& at(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& file, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, torch::Tensor>>& tensors);

Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace vqcpc
