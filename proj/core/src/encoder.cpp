#include "vqcpc/encoder.hpp"

#include "vqcpc/errors.hpp"

namespace vqcpc {

EncoderConfig EncoderConfig::base() {
    EncoderConfig cfg;
    cfg.blocks = {{32, 4, 2}, {64, 1, 1}, {128, 1, 1}, {256, 1, 1}};
    cfg.variant = "base_24.5Hz";
    return cfg;
}

EncoderConfig EncoderConfig::full_50hz() {
    auto cfg = base();
    cfg.blocks[0].stride = 1;
    cfg.variant = "full_50Hz";
    return cfg;
}

EncoderConfig EncoderConfig::half_11_5hz() {
    auto cfg = base();
    cfg.blocks[1] = {64, 4, 2};
    cfg.variant = "half_11.5Hz";
    return cfg;
}

EncoderConfig EncoderConfig::kernel8() {
    auto cfg = base();
    cfg.blocks[0].kernel = 8;
    cfg.variant = "kernel8";
    return cfg;
}

EncoderConfig EncoderConfig::kernel16() {
    auto cfg = base();
    cfg.blocks[0].kernel = 16;
    cfg.variant = "kernel16";
    return cfg;
}

EncoderConfig EncoderConfig::by_name(const std::string& variant) {
    if (variant == "base_24.5Hz") return base();
    if (variant == "full_50Hz") return full_50hz();
    if (variant == "half_11.5Hz") return half_11_5hz();
    if (variant == "kernel8") return kernel8();
    if (variant == "kernel16") return kernel16();
    throw Error("unknown encoder variant: " + variant);
}

int64_t output_len(const EncoderConfig& cfg, int64_t input_len) {
    int64_t len = input_len;
    for (const auto& b : cfg.blocks) {
        if (len < b.kernel) return 0;
        len = (len - b.kernel) / b.stride + 1;
    }
    return len;
}

ConvEncoderImpl::ConvEncoderImpl(EncoderConfig cfg, int64_t in_channels) : cfg_(std::move(cfg)) {
    int64_t in = in_channels;
    for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
        const auto& b = cfg_.blocks[i];
        auto conv = torch::nn::Conv1d(
            torch::nn::Conv1dOptions(in, b.channels, b.kernel).stride(b.stride).bias(true));
        convs_.push_back(register_module("conv" + std::to_string(i), conv));
        in = b.channels;
    }
    dropout_ = register_module("dropout", torch::nn::Dropout(cfg_.dropout));
}

torch::Tensor ConvEncoderImpl::forward(const torch::Tensor& x) {
    if (output_len(cfg_, x.size(2)) < 1)
        throw WindowTooShort("encode: window of length " + std::to_string(x.size(2)) +
                             " is below the encoder's receptive field");
    auto h = x;
    for (auto& conv : convs_) {
        h = conv->forward(h);
        h = torch::relu(h);
        h = dropout_->forward(h);
    }
    return h.transpose(1, 2).contiguous();  // [B, F, d]
}

torch::Tensor windows_to_tensor(const std::vector<SensorWindow>& windows, torch::Dtype dtype) {
    TORCH_CHECK(!windows.empty(), "windows_to_tensor: empty batch");
    const auto B = static_cast<int64_t>(windows.size());
    const auto W = windows.front().width;
    const auto C = windows.front().channels;
    auto out = torch::empty({B, C, W}, torch::kFloat64);
    auto acc = out.accessor<double, 3>();
    for (int64_t b = 0; b < B; ++b) {
        TORCH_CHECK(windows[b].width == W && windows[b].channels == C,
                    "windows_to_tensor: ragged batch");
        for (int64_t t = 0; t < W; ++t)
            for (int64_t c = 0; c < C; ++c) acc[b][c][t] = windows[b].at(t, c);
    }
    return out.to(dtype);
}

}  // namespace vqcpc
