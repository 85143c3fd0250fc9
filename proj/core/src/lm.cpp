#include "vqcpc/lm.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/optim.hpp"

namespace vqcpc {

LMConfig LMConfig::tiny() {
    LMConfig c;
    c.size = "tiny";
    c.embed_dim = 32;
    c.ff_dim = 64;
    c.layers = 1;
    c.heads = 2;
    return c;
}

LMConfig LMConfig::small_() {
    LMConfig c;
    c.size = "small";
    c.embed_dim = 128;
    c.ff_dim = 512;
    c.layers = 2;
    c.heads = 8;
    return c;
}

LMConfig LMConfig::medium() {
    LMConfig c;
    c.size = "medium";
    c.embed_dim = 256;
    c.ff_dim = 1024;
    c.layers = 4;
    c.heads = 8;
    return c;
}

LMConfig LMConfig::by_name(const std::string& size) {
    if (size == "tiny") return tiny();
    if (size == "small") return small_();
    if (size == "medium") return medium();
    throw Error("unknown LM size: " + size);
}

MaskedBatch mask_batch(const torch::Tensor& ids, int64_t vocab_size, const LMConfig& cfg,
                       torch::Generator& gen) {
    const auto mask_id = vocab_size;  // extra embedding row
    auto maskable = ids >= Vocabulary::kReserved;
    auto u = torch::rand(ids.sizes(), gen, ids.options().dtype(torch::kFloat32));
    auto selected = maskable & (u < cfg.mask_prob);

    MaskedBatch out;
    out.mask = selected;
    out.targets = torch::where(selected, ids, torch::full_like(ids, MaskedBatch::kIgnore));

    auto roll = torch::rand(ids.sizes(), gen, ids.options().dtype(torch::kFloat32));
    auto use_mask = selected & (roll < cfg.mask_token_frac);
    auto use_random =
        selected & (roll >= cfg.mask_token_frac) &
        (roll < cfg.mask_token_frac + cfg.random_token_frac);
    auto inputs = ids.clone();
    inputs.masked_fill_(use_mask, mask_id);
    if (vocab_size > Vocabulary::kReserved) {
        auto randoms = torch::randint(Vocabulary::kReserved, vocab_size, ids.sizes(), gen,
                                      ids.options());
        inputs = torch::where(use_random, randoms, inputs);
    }
    out.inputs = inputs;
    return out;
}

MaskedLMImpl::MaskedLMImpl(const LMConfig& cfg, int64_t vocab_size)
    : cfg_(cfg), vocab_size_(vocab_size) {
    token_emb_ = register_module(
        "token_emb", torch::nn::Embedding(torch::nn::EmbeddingOptions(vocab_size + 1, cfg.embed_dim)));
    pos_emb_ = register_module(
        "pos_emb", torch::nn::Embedding(torch::nn::EmbeddingOptions(cfg.max_len, cfg.embed_dim)));
    encoder_layers_ = register_module("layers", torch::nn::ModuleList());
    for (int64_t l = 0; l < cfg.layers; ++l) {
        auto layer = torch::nn::TransformerEncoderLayer(
            torch::nn::TransformerEncoderLayerOptions(cfg.embed_dim, cfg.heads)
                .dim_feedforward(cfg.ff_dim)
                .dropout(cfg.dropout)
                .activation(torch::kGELU));
        encoder_layers_->push_back(layer);
    }
    final_norm_ = register_module(
        "final_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.embed_dim})));
    head_ = register_module("head", torch::nn::Linear(cfg.embed_dim, vocab_size));
}

torch::Tensor MaskedLMImpl::forward(const torch::Tensor& ids) {
    TORCH_CHECK(ids.size(1) <= cfg_.max_len, "MaskedLM: sequence longer than max_len");
    auto positions = torch::arange(ids.size(1), ids.options());
    auto x = token_emb_->forward(ids) + pos_emb_->forward(positions).unsqueeze(0);
    auto pad_mask = ids == Vocabulary::kPad;  // [B, L]
    x = x.transpose(0, 1);                    // [L, B, E]
    for (auto& layer : *encoder_layers_)
        x = layer->as<torch::nn::TransformerEncoderLayer>()->forward(x, {}, pad_mask);
    x = final_norm_->forward(x).transpose(0, 1);  // [B, L, E]
    return head_->forward(x);
}

torch::Tensor MaskedLMImpl::loss(const torch::Tensor& logits, const torch::Tensor& targets) {
    return torch::nn::functional::cross_entropy(
        logits.reshape({-1, logits.size(-1)}), targets.reshape({-1}),
        torch::nn::functional::CrossEntropyFuncOptions().ignore_index(MaskedBatch::kIgnore));
}

torch::Tensor MaskedLMImpl::input_embeddings() {
    return token_emb_->weight.narrow(0, 0, vocab_size_).detach().clone();
}

namespace {

torch::Tensor corpus_to_ids(const std::vector<TokenSequence>& corpus) {
    auto collated = collate(corpus);
    auto ids = torch::empty({collated.batch, collated.max_len}, torch::kLong);
    auto acc = ids.accessor<int64_t, 2>();
    for (int64_t b = 0; b < collated.batch; ++b)
        for (int64_t l = 0; l < collated.max_len; ++l)
            acc[b][l] = collated.ids[b * collated.max_len + l];
    return ids;
}

}  // namespace

LMOutcome pretrain_lm(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                      const LMConfig& cfg_in) {
    if (corpus.empty()) throw EmptyCorpus("pretrain_lm: empty corpus");
    int64_t longest = 0;
    for (const auto& s : corpus) {
        longest = std::max<int64_t>(longest, static_cast<int64_t>(s.ids.size()));
        for (const auto id : s.ids)
            if (id < 0 || id >= vocab.size())
                throw VocabMismatch("pretrain_lm: token id " + std::to_string(id) +
                                    " outside vocabulary of size " + std::to_string(vocab.size()));
    }
    auto cfg = cfg_in;
    cfg.max_len = std::max(cfg.max_len, longest + 8);

    torch::manual_seed(static_cast<int64_t>(cfg.seed));
    LMOutcome out;
    out.model = MaskedLM(cfg, vocab.size());

    auto ids = corpus_to_ids(corpus);
    const auto n = ids.size(0);
    AdamW opt(out.model->parameters(), {.lr = cfg.lr, .weight_decay = 0.0});
    auto mask_gen = at::detail::createCPUGenerator(mix_seed(cfg.seed, 0x3a5));
    std::mt19937_64 order_rng(mix_seed(cfg.seed, 0x0e0));
    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        out.model->train();
        std::shuffle(order.begin(), order.end(), order_rng);
        auto idx = torch::from_blob(order.data(), {n}, torch::kInt64).clone();
        double loss_sum = 0.0;
        int64_t seen = 0;
        for (int64_t start = 0; start < n; start += cfg.batch) {
            const auto len = std::min<int64_t>(cfg.batch, n - start);
            auto batch_ids = ids.index_select(0, idx.narrow(0, start, len));
            auto masked = mask_batch(batch_ids, vocab.size(), cfg, mask_gen);
            if (masked.mask.sum().item<int64_t>() == 0) continue;
            opt.zero_grad();
            auto logits = out.model->forward(masked.inputs);
            auto loss = out.model->loss(logits, masked.targets);
            loss.backward();
            opt.step();
            loss_sum += loss.item<double>() * static_cast<double>(len);
            seen += len;
        }
        out.loss_history.push_back(seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0);
    }
    out.model->eval();
    out.final_masked_accuracy = masked_accuracy(out.model, corpus, cfg, mix_seed(cfg.seed, 0xacc));
    out.embeddings.weights = out.model->input_embeddings().to(torch::kFloat32);
    out.embeddings.vocab_hash = vocab.hash();
    return out;
}

double masked_accuracy(MaskedLM& model, const std::vector<TokenSequence>& corpus,
                       const LMConfig& cfg, uint64_t seed) {
    torch::NoGradGuard no_grad;
    model->eval();
    auto ids = corpus_to_ids(corpus);
    auto gen = at::detail::createCPUGenerator(seed);
    int64_t correct = 0, total = 0;
    for (int64_t start = 0; start < ids.size(0); start += cfg.batch) {
        const auto len = std::min<int64_t>(cfg.batch, ids.size(0) - start);
        auto batch_ids = ids.narrow(0, start, len);
        auto masked = mask_batch(batch_ids, model->vocab_size(), cfg, gen);
        auto where = masked.mask.nonzero();
        if (where.size(0) == 0) continue;
        auto logits = model->forward(masked.inputs);
        auto pred = logits.argmax(-1);
        auto hit = (pred == batch_ids) & masked.mask;
        correct += hit.sum().item<int64_t>();
        total += masked.mask.sum().item<int64_t>();
    }
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

namespace {
constexpr char kEmbMagic[8] = {'V', 'Q', 'C', 'P', 'E', 'M', 'B', '1'};
constexpr uint32_t kEmbVersion = 1;
}  // namespace

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& file) {
    auto w = table.weights.detach().to(torch::kFloat32).contiguous();
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write embeddings " + file.string());
    out.write(kEmbMagic, sizeof(kEmbMagic));
    const uint32_t version = kEmbVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&table.vocab_hash), sizeof(table.vocab_hash));
    const auto rows = static_cast<uint32_t>(w.size(0));
    const auto dims = static_cast<uint32_t>(w.size(1));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&dims), sizeof(dims));
    out.write(static_cast<const char*>(w.const_data_ptr()),
              static_cast<std::streamsize>(w.numel() * sizeof(float)));
}

EmbeddingTable read_embeddings(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw MissingInput("cannot open embeddings " + file.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kEmbMagic, sizeof(kEmbMagic)) != 0)
        throw SchemaVersion("not an embeddings file: " + file.string());
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kEmbVersion)
        throw SchemaVersion("embeddings version " + std::to_string(version) + " unsupported");
    EmbeddingTable table;
    uint32_t rows = 0, dims = 0;
    in.read(reinterpret_cast<char*>(&table.vocab_hash), sizeof(table.vocab_hash));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&dims), sizeof(dims));
    table.weights = torch::empty({rows, dims}, torch::kFloat32);
    in.read(static_cast<char*>(table.weights.data_ptr()),
            static_cast<std::streamsize>(table.weights.numel() * sizeof(float)));
    if (!in) throw SchemaVersion("truncated embeddings file: " + file.string());
    return table;
}

}  // namespace vqcpc
