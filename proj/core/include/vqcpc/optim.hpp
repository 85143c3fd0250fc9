#pragma once
#include <string>
#include <vector>

#include <torch/torch.h>

namespace vqcpc {

// Adam with decoupled weight decay. Moments are plain tensors keyed by
// parameter order so the whole optimizer state serializes through the
// checkpoint container.
class AdamW {
   public:
    struct Options {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    AdamW(std::vector<torch::Tensor> params, Options opts);

    void set_lr(double lr) { opts_.lr = lr; }
    double lr() const { return opts_.lr; }

    void zero_grad();
    void step();

    int64_t step_count() const { return step_count_; }
    std::vector<torch::Tensor>& exp_avg() { return exp_avg_; }
    std::vector<torch::Tensor>& exp_avg_sq() { return exp_avg_sq_; }
    void load_state(const std::vector<torch::Tensor>& exp_avg,
                    const std::vector<torch::Tensor>& exp_avg_sq, int64_t step_count);

   private:
    std::vector<torch::Tensor> params_;
    std::vector<torch::Tensor> exp_avg_;
    std::vector<torch::Tensor> exp_avg_sq_;
    Options opts_;
    int64_t step_count_ = 0;
};

}  // namespace vqcpc
