#pragma once
#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

namespace vqcpc_test {

// Central finite difference of a scalar loss w.r.t. selected flat positions
// of one parameter tensor. The loss function must be deterministic.
inline std::vector<double> fd_grad(const std::function<double()>& loss,
                                   torch::Tensor param,
                                   const std::vector<int64_t>& positions, double h = 1e-5) {
    std::vector<double> grads;
    auto flat = param.view({-1});
    torch::NoGradGuard no_grad_outer;
    for (const auto pos : positions) {
        const double orig = flat[pos].item<double>();
        flat[pos] = orig + h;
        const double up = loss();
        flat[pos] = orig - h;
        const double down = loss();
        flat[pos] = orig;
        grads.push_back((up - down) / (2.0 * h));
    }
    return grads;
}

inline std::vector<int64_t> random_positions(int64_t numel, int64_t count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int64_t> out;
    for (int64_t i = 0; i < count; ++i) out.push_back(static_cast<int64_t>(rng() % numel));
    return out;
}

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

}  // namespace vqcpc_test
