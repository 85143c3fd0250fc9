#pragma once
#include <string>
#include <vector>

#include <torch/torch.h>

#include "vqcpc/datapipe.hpp"

namespace vqcpc {

// ============================================================================
// Strided 1-D convolutional encoder mapping sensor windows to latent frames.
// No padding anywhere: output length follows floor((L - k) / s) + 1 composed
// across blocks.
// ============================================================================

struct ConvBlockSpec {
    int64_t channels;
    int64_t kernel;
    int64_t stride;
};

struct EncoderConfig {
    std::vector<ConvBlockSpec> blocks;
    double dropout = 0.2;
    std::string variant = "base_24.5Hz";

    int64_t latent_dim() const { return blocks.empty() ? 0 : blocks.back().channels; }

    // Base: channels (32, 64, 128, 256), kernels (4, 1, 1, 1), strides
    // (2, 1, 1, 1); 100 timesteps -> 49 frames.
    static EncoderConfig base();
    // Stride 1 in block 1 (nominal "50 Hz"); 100 -> 97 frames.
    static EncoderConfig full_50hz();
    // Block 2 gets kernel 4 / stride 2; 100 -> 23 frames.
    static EncoderConfig half_11_5hz();
    // First-layer kernel widened to 8 / 16.
    static EncoderConfig kernel8();
    static EncoderConfig kernel16();
    static EncoderConfig by_name(const std::string& variant);
};

// Pure length arithmetic; returns 0 when the input is too short.
int64_t output_len(const EncoderConfig& cfg, int64_t input_len);

class ConvEncoderImpl : public torch::nn::Module {
   public:
    ConvEncoderImpl(EncoderConfig cfg, int64_t in_channels);

    // x: [B, C, W] -> [B, F, d]. Throws WindowTooShort when W is below the
    // first block's receptive field.
    torch::Tensor forward(const torch::Tensor& x);

    const EncoderConfig& config() const { return cfg_; }

   private:
    EncoderConfig cfg_;
    std::vector<torch::nn::Conv1d> convs_;
    torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(ConvEncoder);

// [B, C, W] float tensor from windows (all same shape).
torch::Tensor windows_to_tensor(const std::vector<SensorWindow>& windows,
                                torch::Dtype dtype = torch::kFloat32);

}  // namespace vqcpc
