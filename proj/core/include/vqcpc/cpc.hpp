#pragma once
#include <cstdint>

#include <torch/torch.h>

#include "vqcpc/aggregator.hpp"
#include "vqcpc/encoder.hpp"
#include "vqcpc/quantizer.hpp"

namespace vqcpc {

// ============================================================================
// Multi-step contrastive future prediction over quantized latents.
// ============================================================================

struct CPCConfig {
    int64_t horizon = 10;        // k
    int64_t num_negatives = 10;
};

// One linear map (no bias) per future step s = 1..k.
class StepProjectionsImpl : public torch::nn::Module {
   public:
    StepProjectionsImpl(int64_t dim, int64_t horizon);
    torch::Tensor project(int64_t step, const torch::Tensor& contexts);  // step in [1, k]
    int64_t horizon() const { return static_cast<int64_t>(steps_.size()); }

   private:
    std::vector<torch::nn::Linear> steps_;
};
TORCH_MODULE(StepProjections);

// For every valid (t, s): score = dot(project_s(c_t), candidate) where the
// candidates are the true z_{t+s} plus num_negatives z-vectors drawn
// uniformly from all other positions in the batch (true target excluded,
// fresh draw per (t, s)). Returns the mean cross-entropy of identifying the
// true candidate. Throws SequenceTooShort when F <= 1.
torch::Tensor cpc_loss(const torch::Tensor& contexts, const torch::Tensor& targets,
                       StepProjections& projections, const CPCConfig& cfg,
                       torch::Generator& gen);

// ============================================================================
// Full pre-training model: encoder -> quantizer -> (straight-through) ->
// aggregator, with the CPC objective plus the two VQ terms.
// ============================================================================

struct VqCpcConfig {
    EncoderConfig encoder = EncoderConfig::base();
    QuantizerConfig quantizer;
    AggregatorConfig aggregator;
    CPCConfig cpc;
    int64_t in_channels = 3;
};

struct PretrainLosses {
    torch::Tensor total;
    torch::Tensor cpc;
    torch::Tensor vq_total;
    torch::Tensor codebook_term;
    torch::Tensor commitment_term;
};

class VqCpcModelImpl : public torch::nn::Module {
   public:
    explicit VqCpcModelImpl(VqCpcConfig cfg);

    torch::Tensor encode(const torch::Tensor& x) { return encoder_->forward(x); }
    QuantizedSequence quantize(const torch::Tensor& z) { return codebook_->quantize(z); }
    torch::Tensor aggregate(const torch::Tensor& zq) { return aggregator_->forward(zq); }

    // x: [B, C, W]. include_cpc=false evaluates only the VQ terms (used by
    // the gradient-routing checks).
    PretrainLosses pretrain_loss(const torch::Tensor& x, torch::Generator& gen,
                                 bool include_cpc = true);

    // Per-frame composite codeword keys for a batch of windows: [B][F].
    std::vector<std::vector<uint64_t>> tokens(const torch::Tensor& x);

    const VqCpcConfig& config() const { return cfg_; }
    ConvEncoder& encoder() { return encoder_; }
    Codebook& codebook() { return codebook_; }
    CausalAggregator& aggregator() { return aggregator_; }
    StepProjections& projections() { return projections_; }

   private:
    VqCpcConfig cfg_;
    ConvEncoder encoder_{nullptr};
    Codebook codebook_{nullptr};
    CausalAggregator aggregator_{nullptr};
    StepProjections projections_{nullptr};
};
TORCH_MODULE(VqCpcModel);

}  // namespace vqcpc
