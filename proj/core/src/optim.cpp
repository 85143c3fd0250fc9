#include "vqcpc/optim.hpp"

#include <cmath>

namespace vqcpc {

AdamW::AdamW(std::vector<torch::Tensor> params, Options opts)
    : params_(std::move(params)), opts_(opts) {
    for (const auto& p : params_) {
        exp_avg_.push_back(torch::zeros_like(p));
        exp_avg_sq_.push_back(torch::zeros_like(p));
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_)
        if (p.grad().defined()) p.mutable_grad().zero_();
}

void AdamW::step() {
    torch::NoGradGuard no_grad;
    ++step_count_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        if (!p.grad().defined()) continue;
        const auto g = p.grad();
        if (opts_.weight_decay != 0.0) p.mul_(1.0 - opts_.lr * opts_.weight_decay);
        exp_avg_[i].mul_(opts_.beta1).add_(g, 1.0 - opts_.beta1);
        exp_avg_sq_[i].mul_(opts_.beta2).addcmul_(g, g, 1.0 - opts_.beta2);
        auto denom = (exp_avg_sq_[i] / bc2).sqrt_().add_(opts_.eps);
        p.addcdiv_(exp_avg_[i] / bc1, denom, -opts_.lr);
    }
}

void AdamW::load_state(const std::vector<torch::Tensor>& exp_avg,
                       const std::vector<torch::Tensor>& exp_avg_sq, int64_t step_count) {
    TORCH_CHECK(exp_avg.size() == params_.size() && exp_avg_sq.size() == params_.size(),
                "AdamW::load_state: state size mismatch");
    torch::NoGradGuard no_grad;
    for (size_t i = 0; i < params_.size(); ++i) {
        exp_avg_[i].copy_(exp_avg[i]);
        exp_avg_sq_[i].copy_(exp_avg_sq[i]);
    }
    step_count_ = step_count;
}

}  // namespace vqcpc
