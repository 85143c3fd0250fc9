#include "vqcpc/cpc.hpp"

#include "vqcpc/errors.hpp"

namespace vqcpc {

StepProjectionsImpl::StepProjectionsImpl(int64_t dim, int64_t horizon) {
    for (int64_t s = 0; s < horizon; ++s) {
        auto lin = torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false));
        steps_.push_back(register_module("step" + std::to_string(s + 1), lin));
    }
}

torch::Tensor StepProjectionsImpl::project(int64_t step, const torch::Tensor& contexts) {
    return steps_.at(step - 1)->forward(contexts);
}

torch::Tensor cpc_loss(const torch::Tensor& contexts, const torch::Tensor& targets,
                       StepProjections& projections, const CPCConfig& cfg,
                       torch::Generator& gen) {
    TORCH_CHECK(contexts.sizes() == targets.sizes(), "cpc_loss: contexts/targets shape mismatch");
    const auto B = contexts.size(0), F = contexts.size(1);
    if (F <= 1) throw SequenceTooShort("cpc_loss: need at least 2 frames, got " + std::to_string(F));

    const auto z_flat = targets.reshape({B * F, targets.size(2)});
    auto loss_sum = torch::zeros({}, contexts.options());
    int64_t count = 0;

    for (int64_t s = 1; s <= cfg.horizon; ++s) {
        const int64_t valid = F - s;
        if (valid < 1) break;
        auto proj = projections->project(s, contexts.narrow(1, 0, valid));  // [B, valid, d]
        auto true_z = targets.narrow(1, s, valid);                          // [B, valid, d]

        // Flat positions of each true target; negatives drawn uniformly
        // over the remaining B*F - 1 slots via the shift trick.
        auto true_flat = (torch::arange(B, contexts.options().dtype(torch::kLong)) * F)
                             .reshape({B, 1}) +
                         torch::arange(s, s + valid, contexts.options().dtype(torch::kLong))
                             .reshape({1, valid});
        auto raw = torch::randint(0, B * F - 1, {B, valid, cfg.num_negatives}, gen,
                                  contexts.options().dtype(torch::kLong));
        auto neg_idx = raw + (raw >= true_flat.unsqueeze(-1)).to(torch::kLong);
        auto negs = z_flat.index_select(0, neg_idx.reshape({-1}))
                        .reshape({B, valid, cfg.num_negatives, targets.size(2)});

        auto pos_score = (proj * true_z).sum(-1, /*keepdim=*/true);        // [B, valid, 1]
        auto neg_score = (proj.unsqueeze(2) * negs).sum(-1);               // [B, valid, N]
        auto logits = torch::cat({pos_score, neg_score}, -1);              // [B, valid, N+1]
        auto ce = torch::logsumexp(logits, -1) - logits.select(-1, 0);
        loss_sum = loss_sum + ce.sum();
        count += B * valid;
    }
    TORCH_CHECK(count > 0, "cpc_loss: no valid prediction targets");
    return loss_sum / static_cast<double>(count);
}

VqCpcModelImpl::VqCpcModelImpl(VqCpcConfig cfg) : cfg_(std::move(cfg)) {
    TORCH_CHECK(cfg_.encoder.latent_dim() == cfg_.quantizer.dim,
                "encoder latent dim must match quantizer dim");
    TORCH_CHECK(cfg_.quantizer.dim == cfg_.aggregator.filters,
                "quantizer dim must match aggregator filters");
    encoder_ = register_module("encoder", ConvEncoder(cfg_.encoder, cfg_.in_channels));
    codebook_ = register_module("codebook", Codebook(cfg_.quantizer));
    aggregator_ = register_module("aggregator", CausalAggregator(cfg_.aggregator));
    projections_ = register_module(
        "projections", StepProjections(cfg_.quantizer.dim, cfg_.cpc.horizon));
}

PretrainLosses VqCpcModelImpl::pretrain_loss(const torch::Tensor& x, torch::Generator& gen,
                                             bool include_cpc) {
    auto z = encoder_->forward(x);
    auto q = codebook_->quantize(z);
    PretrainLosses out;
    out.codebook_term = q.codebook_term;
    out.commitment_term = q.commitment_term;
    out.vq_total = codebook_->loss_total(q);
    if (include_cpc) {
        auto zq = straight_through(z, q.zhat);
        auto contexts = aggregator_->forward(zq);
        out.cpc = cpc_loss(contexts, z, projections_, cfg_.cpc, gen);
        out.total = out.cpc + out.vq_total;
    } else {
        out.cpc = torch::zeros({}, z.options());
        out.total = out.vq_total;
    }
    return out;
}

std::vector<std::vector<uint64_t>> VqCpcModelImpl::tokens(const torch::Tensor& x) {
    torch::NoGradGuard no_grad;
    auto z = encoder_->forward(x);
    auto q = codebook_->quantize(z);
    const auto B = q.indices.size(0);
    std::vector<std::vector<uint64_t>> out(B);
    for (int64_t b = 0; b < B; ++b)
        out[b] = composite_codewords(q.indices.select(0, b), cfg_.quantizer.vars);
    return out;
}

}  // namespace vqcpc
