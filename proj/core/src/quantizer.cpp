#include "vqcpc/quantizer.hpp"

#include <cmath>
#include <fstream>

#include "vqcpc/errors.hpp"

namespace vqcpc {

torch::Tensor straight_through(const torch::Tensor& z, const torch::Tensor& zhat) {
    TORCH_CHECK(z.sizes() == zhat.sizes(), "straight_through: shape mismatch");
    return z + (zhat - z).detach();
}

CodebookImpl::CodebookImpl(QuantizerConfig cfg) : cfg_(cfg) {
    if (cfg_.dim % cfg_.groups != 0)
        throw DimensionMismatch("codebook: dim must be divisible by groups");
    if (cfg_.vars < 2) throw Error("codebook: vars must be >= 2");
    entries_ = register_parameter(
        "entries",
        torch::randn({cfg_.groups, cfg_.vars, cfg_.dim / cfg_.groups}) * cfg_.init_scale);
}

QuantizedSequence CodebookImpl::quantize(const torch::Tensor& z_in) {
    auto z = z_in.dim() == 2 ? z_in.unsqueeze(0) : z_in;
    if (z.size(-1) != cfg_.dim)
        throw DimensionMismatch("quantize: frame dim " + std::to_string(z.size(-1)) +
                                " != codebook dim " + std::to_string(cfg_.dim));
    const auto B = z.size(0), F = z.size(1);
    const auto G = cfg_.groups, V = cfg_.vars, P = cfg_.dim / cfg_.groups;

    // [B, F, G, P]
    auto zg = z.reshape({B, F, G, P});
    // Squared distances to every entry: [B, F, G, V]
    auto diff = zg.unsqueeze(3) - entries_.unsqueeze(0).unsqueeze(0);
    auto dists = diff.detach().pow(2).sum(-1);
    // argmin returns the first (smallest) index on ties
    auto indices = dists.argmin(-1);  // [B, F, G] long

    // Gather selected entries, keeping the graph into entries_ for the
    // codebook loss term: flatten group codebooks and index.
    auto flat_idx = (indices + torch::arange(G, indices.options()).mul(V)).reshape({-1});
    auto zhat = entries_.reshape({G * V, P}).index_select(0, flat_idx).reshape({B, F, G, P});

    QuantizedSequence q;
    q.indices = indices;
    q.zhat = zhat.reshape({B, F, cfg_.dim});
    auto zflat = z.reshape({B, F, cfg_.dim});
    q.codebook_term = (q.zhat - zflat.detach()).pow(2).sum(-1).mean();
    q.commitment_term = (zflat - q.zhat.detach()).pow(2).sum(-1).mean();
    if (z_in.dim() == 2) {
        q.zhat = q.zhat.squeeze(0);
        q.indices = q.indices.squeeze(0);
    }
    return q;
}

torch::Tensor CodebookImpl::loss_total(const QuantizedSequence& q) const {
    return vq_loss_total(q, cfg_.gamma);
}

torch::Tensor vq_loss_total(const QuantizedSequence& q, double gamma) {
    return q.codebook_term + gamma * q.commitment_term;
}

std::vector<uint64_t> composite_codewords(const torch::Tensor& indices, int64_t vars) {
    auto idx = indices.dim() == 2 ? indices : indices.reshape({-1, indices.size(-1)});
    idx = idx.contiguous();
    const auto F = idx.size(0), G = idx.size(1);
    auto acc = idx.accessor<int64_t, 2>();
    std::vector<uint64_t> out(F);
    for (int64_t f = 0; f < F; ++f) {
        uint64_t key = 0;
        for (int64_t g = 0; g < G; ++g)
            key = key * static_cast<uint64_t>(vars) + static_cast<uint64_t>(acc[f][g]);
        out[f] = key;
    }
    return out;
}

UsageStats usage_stats(const std::vector<RawTokenSequence>& corpus) {
    UsageStats s;
    int64_t total = 0;
    for (const auto& seq : corpus)
        for (const auto cw : seq.codewords) {
            ++s.histogram[cw];
            ++total;
        }
    if (total == 0) throw EmptyCorpus("usage_stats: empty corpus");
    s.distinct_codewords = static_cast<int64_t>(s.histogram.size());
    for (const auto& [cw, count] : s.histogram) {
        const double p = static_cast<double>(count) / static_cast<double>(total);
        s.entropy_bits -= p * std::log2(p);
    }
    return s;
}

void write_usage_csv(const UsageStats& stats, int64_t groups, int64_t vars,
                     const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "codeword,count\n";
    for (const auto& [cw, count] : stats.histogram)
        out << format_codeword(cw, groups, vars) << ',' << count << '\n';
}

}  // namespace vqcpc
