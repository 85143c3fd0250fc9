#pragma once
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// Masked-token language model over framed token sequences (RoBERTa-style
// objective) and export of its input-embedding table for the classifier.
// ============================================================================

struct LMConfig {
    std::string size = "tiny";  // tiny | small | medium
    int64_t embed_dim = 32;
    int64_t ff_dim = 64;
    int64_t layers = 1;
    int64_t heads = 2;
    double dropout = 0.1;
    double mask_prob = 0.15;
    double mask_token_frac = 0.8;   // of masked positions: MASK token
    double random_token_frac = 0.1; // random non-reserved token
    int64_t max_len = 128;
    // Training schedule (paper leaves it open; these are artifact defaults).
    double lr = 1e-3;
    int64_t epochs = 30;
    int64_t batch = 64;
    uint64_t seed = 7;

    static LMConfig tiny();
    static LMConfig small_();   // embed 128, ff 512, 2 layers, 8 heads
    static LMConfig medium();   // embed 256, ff 1024, 4 layers, 8 heads
    static LMConfig by_name(const std::string& size);
};

// Masking: exactly the sampled positions carry targets; everything else is
// kIgnore. Reserved ids (PAD/UNK/START/END) are never masked. Of the masked
// positions, mask_token_frac become MASK (id = vocab_size), random_token_frac
// become a random non-reserved token, the rest stay unchanged.
struct MaskedBatch {
    torch::Tensor inputs;   // [B, L] long
    torch::Tensor targets;  // [B, L] long; kIgnore where no prediction is due
    torch::Tensor mask;     // [B, L] bool
    static constexpr int64_t kIgnore = -100;
};

MaskedBatch mask_batch(const torch::Tensor& ids, int64_t vocab_size, const LMConfig& cfg,
                       torch::Generator& gen);

class MaskedLMImpl : public torch::nn::Module {
   public:
    MaskedLMImpl(const LMConfig& cfg, int64_t vocab_size);

    // ids: [B, L] long -> logits [B, L, vocab_size]. PAD positions are
    // excluded from attention.
    torch::Tensor forward(const torch::Tensor& ids);

    // Cross-entropy on target positions only.
    torch::Tensor loss(const torch::Tensor& logits, const torch::Tensor& targets);

    torch::Tensor input_embeddings();  // [vocab_size, embed] (MASK row excluded)
    int64_t vocab_size() const { return vocab_size_; }

   private:
    LMConfig cfg_;
    int64_t vocab_size_ = 0;
    torch::nn::Embedding token_emb_{nullptr};  // vocab_size + 1 rows (MASK last)
    torch::nn::Embedding pos_emb_{nullptr};
    torch::nn::ModuleList encoder_layers_;
    torch::nn::LayerNorm final_norm_{nullptr};
    torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(MaskedLM);

struct EmbeddingTable {
    torch::Tensor weights;  // vocab_size x embed, float32
    uint64_t vocab_hash = 0;
};

struct LMOutcome {
    MaskedLM model{nullptr};
    EmbeddingTable embeddings;
    std::vector<double> loss_history;
    double final_masked_accuracy = 0.0;
};

// Throws VocabMismatch when the corpus contains ids outside the vocabulary.
LMOutcome pretrain_lm(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                      const LMConfig& cfg);

// Masked-token accuracy of a trained model on a corpus (fresh masking with
// the given seed).
double masked_accuracy(MaskedLM& model, const std::vector<TokenSequence>& corpus,
                       const LMConfig& cfg, uint64_t seed);

// embeddings.bin: magic, version, vocab hash, rows, dims, row-major float32.
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& file);
EmbeddingTable read_embeddings(const std::filesystem::path& file);

}  // namespace vqcpc
