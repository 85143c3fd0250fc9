#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "vqcpc/datapipe.hpp"
#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// Recurrent token classifier: embedding -> 2-layer LSTM/GRU -> MLP over the
// last non-PAD hidden state. Optionally consumes a frozen external embedding
// table (LM stage).
// ============================================================================

struct ClassifierConfig {
    std::string rnn_type = "GRU";  // "GRU" | "LSTM"
    int64_t embedding_dim = 128;
    int64_t hidden = 128;
    int64_t rnn_layers = 2;
    double dropout = 0.2;
    std::vector<int64_t> mlp_hidden = {256, 128};
    double lr = 5e-4;
    double l2 = 1e-4;
    int64_t batch = 256;
    int64_t epochs = 50;
    double lr_decay = 0.8;
    int64_t lr_decay_every = 10;
    uint64_t seed = 7;
};

// lr0 * decay^floor((epoch - 1) / every); epochs are 1-based.
double classifier_lr_at(int64_t epoch, const ClassifierConfig& cfg);

class RnnClassifierImpl : public torch::nn::Module {
   public:
    // When `frozen_embeddings` is given, the table is used verbatim and
    // never updated; embedding_dim follows the table.
    RnnClassifierImpl(const ClassifierConfig& cfg, int64_t vocab_size, int64_t num_classes,
                      std::optional<torch::Tensor> frozen_embeddings = std::nullopt);

    // ids: [B, L] long (PAD-padded), lengths: [B] long. Returns [B, classes].
    torch::Tensor forward(const torch::Tensor& ids, const torch::Tensor& lengths);

    bool embeddings_frozen() const { return frozen_; }
    torch::Tensor embedding_weight() { return embedding_->weight; }
    std::vector<torch::Tensor> trainable_parameters();

   private:
    ClassifierConfig cfg_;
    bool frozen_ = false;
    torch::nn::Embedding embedding_{nullptr};
    torch::nn::GRU gru_{nullptr};
    torch::nn::LSTM lstm_{nullptr};
    torch::nn::Sequential mlp_{nullptr};
};
TORCH_MODULE(RnnClassifier);

// ============================================================================
// Training and evaluation
// ============================================================================

struct TrainedClassifier {
    RnnClassifier model{nullptr};
    std::vector<int> classes;           // index in logits -> original label id
    std::map<int, int64_t> label_to_index;
    std::vector<double> train_loss_history;
    std::vector<double> train_acc_history;
    int64_t vocab_size = 0;
};

// Trains for cfg.epochs with the stepped lr decay; when `embeddings` is
// given the table is frozen. Emits a warning (and scores as errors later)
// when val labels are not a subset of train labels.
TrainedClassifier train_classifier(const std::vector<TokenSequence>& train,
                                   const std::vector<TokenSequence>& val,
                                   const ClassifierConfig& cfg,
                                   std::optional<torch::Tensor> embeddings = std::nullopt);

struct EvalReport {
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::map<int, double> per_class_f1;
    std::map<int, std::map<int, int64_t>> confusion;  // true label -> predicted -> count
};

std::vector<int> predict(const TrainedClassifier& clf, const std::vector<TokenSequence>& data);
EvalReport evaluate(const TrainedClassifier& clf, const std::vector<TokenSequence>& test);

// Macro F1 over the union of observed true/predicted labels; classes never
// predicted score 0.
double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred);
EvalReport classification_report(const std::vector<int>& y_true, const std::vector<int>& y_pred);

}  // namespace vqcpc
