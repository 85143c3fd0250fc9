#pragma once
#include <cstdint>
#include <map>
#include <vector>

#include <torch/torch.h>

#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// Grouped K-means vector quantization with straight-through gradients.
// Each latent frame z (dim d) is split into G partitions; partition g is
// replaced by its nearest entry from an independent codebook of V vectors of
// dimension d/G. The selected indices are the discrete representation.
// ============================================================================

struct QuantizerConfig {
    int64_t groups = 2;
    int64_t vars = 100;
    int64_t dim = 256;       // must be divisible by groups
    double gamma = 0.25;     // commitment weight
    double init_scale = 0.1;
};

struct QuantizedSequence {
    torch::Tensor zhat;       // [B, F, d]; selected entries, grad flows to codebook
    torch::Tensor indices;    // [B, F, G] long
    torch::Tensor codebook_term;    // scalar: mean over frames of ||sg(z) - zhat||^2
    torch::Tensor commitment_term;  // scalar: mean over frames of ||z - sg(zhat)||^2
};

// Forward value = zhat; backward passes the gradient to z unchanged and
// nothing to the codebook.
torch::Tensor straight_through(const torch::Tensor& z, const torch::Tensor& zhat);

class CodebookImpl : public torch::nn::Module {
   public:
    explicit CodebookImpl(QuantizerConfig cfg);

    // z: [B, F, d] (a single sequence may pass [F, d]; it is promoted).
    // Ties in the nearest-neighbor search resolve to the smallest index.
    QuantizedSequence quantize(const torch::Tensor& z);

    // codebook_term + gamma * commitment_term.
    torch::Tensor loss_total(const QuantizedSequence& q) const;

    const QuantizerConfig& config() const { return cfg_; }
    torch::Tensor entries() { return entries_; }  // [G, V, d/G]

   private:
    QuantizerConfig cfg_;
    torch::Tensor entries_;
};
TORCH_MODULE(Codebook);

torch::Tensor vq_loss_total(const QuantizedSequence& q, double gamma);

// Packs per-frame group indices [.., G] into composite codeword keys.
std::vector<uint64_t> composite_codewords(const torch::Tensor& indices, int64_t vars);

// ============================================================================
// Codeword usage over a corpus.
// ============================================================================

struct UsageStats {
    int64_t distinct_codewords = 0;
    double entropy_bits = 0.0;
    std::map<uint64_t, int64_t> histogram;
};

UsageStats usage_stats(const std::vector<RawTokenSequence>& corpus);
void write_usage_csv(const UsageStats& stats, int64_t groups, int64_t vars,
                     const std::filesystem::path& file);

}  // namespace vqcpc
