#pragma once
#include <cstdint>

#include <torch/torch.h>

namespace vqcpc {

// ============================================================================
// Causal convolutional aggregator: summarizes quantized latents z_{<=t} into
// context vectors c_t. Left zero-padding keeps F_out == F_in; block b uses
// kernel size b + 2, stride 1, with dropout, layer norm and a residual
// connection per block.
// ============================================================================

struct AggregatorConfig {
    int64_t num_blocks = 2;  // paper tunes over {2, 4, 6}
    int64_t filters = 256;
    double dropout = 0.2;
};

class CausalAggregatorImpl : public torch::nn::Module {
   public:
    explicit CausalAggregatorImpl(AggregatorConfig cfg);

    // x: [B, F, d] -> [B, F, d]; c_t depends only on x_{<=t}.
    torch::Tensor forward(const torch::Tensor& x);

    const AggregatorConfig& config() const { return cfg_; }

   private:
    AggregatorConfig cfg_;
    std::vector<torch::nn::Conv1d> convs_;
    std::vector<torch::nn::LayerNorm> norms_;
    torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(CausalAggregator);

}  // namespace vqcpc
