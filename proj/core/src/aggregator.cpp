#include "vqcpc/aggregator.hpp"

namespace vqcpc {

CausalAggregatorImpl::CausalAggregatorImpl(AggregatorConfig cfg) : cfg_(cfg) {
    for (int64_t b = 0; b < cfg_.num_blocks; ++b) {
        const int64_t kernel = b + 2;
        auto conv = torch::nn::Conv1d(
            torch::nn::Conv1dOptions(cfg_.filters, cfg_.filters, kernel).stride(1).bias(true));
        convs_.push_back(register_module("conv" + std::to_string(b), conv));
        norms_.push_back(register_module(
            "norm" + std::to_string(b),
            torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg_.filters}))));
    }
    dropout_ = register_module("dropout", torch::nn::Dropout(cfg_.dropout));
}

torch::Tensor CausalAggregatorImpl::forward(const torch::Tensor& x) {
    auto h = x;  // [B, F, d]
    for (int64_t b = 0; b < cfg_.num_blocks; ++b) {
        const int64_t kernel = b + 2;
        auto t = h.transpose(1, 2);  // [B, d, F]
        t = torch::constant_pad_nd(t, {kernel - 1, 0});  // left pad: causal
        t = convs_[b]->forward(t).transpose(1, 2);       // [B, F, d]
        t = dropout_->forward(t);
        t = norms_[b]->forward(t);
        t = torch::relu(t);
        h = h + t;
    }
    return h;
}

}  // namespace vqcpc
