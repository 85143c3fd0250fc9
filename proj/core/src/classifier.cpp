#include "vqcpc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/optim.hpp"

namespace vqcpc {

double classifier_lr_at(int64_t epoch, const ClassifierConfig& cfg) {
    const auto drops = (epoch - 1) / cfg.lr_decay_every;
    return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(drops));
}

RnnClassifierImpl::RnnClassifierImpl(const ClassifierConfig& cfg, int64_t vocab_size,
                                     int64_t num_classes,
                                     std::optional<torch::Tensor> frozen_embeddings)
    : cfg_(cfg) {
    int64_t embed_dim = cfg.embedding_dim;
    if (frozen_embeddings) {
        frozen_ = true;
        embed_dim = frozen_embeddings->size(1);
        vocab_size = frozen_embeddings->size(0);
    }
    embedding_ = register_module(
        "embedding", torch::nn::Embedding(torch::nn::EmbeddingOptions(vocab_size, embed_dim)));
    if (frozen_embeddings) {
        torch::NoGradGuard no_grad;
        embedding_->weight.copy_(frozen_embeddings->to(torch::kFloat32));
        embedding_->weight.set_requires_grad(false);
    }

    if (cfg.rnn_type == "GRU") {
        gru_ = register_module("rnn", torch::nn::GRU(torch::nn::GRUOptions(embed_dim, cfg.hidden)
                                                         .num_layers(cfg.rnn_layers)
                                                         .dropout(cfg.dropout)
                                                         .batch_first(true)));
    } else if (cfg.rnn_type == "LSTM") {
        lstm_ = register_module("rnn", torch::nn::LSTM(torch::nn::LSTMOptions(embed_dim, cfg.hidden)
                                                           .num_layers(cfg.rnn_layers)
                                                           .dropout(cfg.dropout)
                                                           .batch_first(true)));
    } else {
        throw Error("classifier: rnn_type must be GRU or LSTM, got " + cfg.rnn_type);
    }

    auto mlp = torch::nn::Sequential();
    int64_t in = cfg.hidden;
    for (const auto h : cfg.mlp_hidden) {
        mlp->push_back(torch::nn::Linear(in, h));
        mlp->push_back(torch::nn::BatchNorm1d(h));
        mlp->push_back(torch::nn::Functional(torch::relu));
        mlp->push_back(torch::nn::Dropout(cfg.dropout));
        in = h;
    }
    mlp->push_back(torch::nn::Linear(in, num_classes));
    mlp_ = register_module("mlp", mlp);
}

torch::Tensor RnnClassifierImpl::forward(const torch::Tensor& ids, const torch::Tensor& lengths) {
    auto emb = embedding_->forward(ids);  // [B, L, E]
    torch::Tensor outputs;
    if (gru_) outputs = std::get<0>(gru_->forward(emb));
    else outputs = std::get<0>(lstm_->forward(emb));
    // Last non-PAD timestep of the top layer; PAD positions beyond a
    // sequence's length never influence this (the recurrence is causal).
    auto gather_idx = (lengths - 1).clamp_min(0).reshape({-1, 1, 1}).expand(
        {outputs.size(0), 1, outputs.size(2)});
    auto last = outputs.gather(1, gather_idx).squeeze(1);  // [B, H]
    return mlp_->forward(last);
}

std::vector<torch::Tensor> RnnClassifierImpl::trainable_parameters() {
    std::vector<torch::Tensor> out;
    for (auto& p : parameters())
        if (p.requires_grad()) out.push_back(p);
    return out;
}

namespace {

struct Batchified {
    torch::Tensor ids;      // [N, L] long
    torch::Tensor lengths;  // [N] long
    torch::Tensor labels;   // [N] long (index into classes)
};

Batchified to_tensors(const std::vector<TokenSequence>& data,
                      const std::map<int, int64_t>& label_to_index) {
    auto collated = collate(data);
    auto ids = torch::empty({collated.batch, collated.max_len}, torch::kLong);
    auto ids_acc = ids.accessor<int64_t, 2>();
    for (int64_t b = 0; b < collated.batch; ++b)
        for (int64_t l = 0; l < collated.max_len; ++l)
            ids_acc[b][l] = collated.ids[b * collated.max_len + l];
    // Effective length = last non-PAD position + 1, so trailing PADs inside
    // a sequence's ids are as inert as collation padding.
    auto lengths = torch::empty({collated.batch}, torch::kLong);
    auto len_acc = lengths.accessor<int64_t, 1>();
    for (int64_t b = 0; b < collated.batch; ++b) {
        int64_t len = 0;
        for (int64_t l = 0; l < collated.max_len; ++l)
            if (ids_acc[b][l] != Vocabulary::kPad) len = l + 1;
        len_acc[b] = std::max<int64_t>(len, 1);
    }
    auto labels = torch::empty({collated.batch}, torch::kLong);
    auto lab_acc = labels.accessor<int64_t, 1>();
    for (int64_t b = 0; b < collated.batch; ++b) {
        auto it = label_to_index.find(data[b].label);
        lab_acc[b] = it == label_to_index.end() ? -1 : it->second;
    }
    return {ids, lengths, labels};
}

}  // namespace

TrainedClassifier train_classifier(const std::vector<TokenSequence>& train,
                                   const std::vector<TokenSequence>& val,
                                   const ClassifierConfig& cfg,
                                   std::optional<torch::Tensor> embeddings) {
    if (train.empty()) throw EmptySplit("train_classifier: empty train split");

    TrainedClassifier clf;
    std::set<int> train_labels;
    int32_t max_id = Vocabulary::kReserved - 1;
    for (const auto& s : train) {
        train_labels.insert(s.label);
        for (const auto id : s.ids) max_id = std::max(max_id, id);
    }
    clf.classes.assign(train_labels.begin(), train_labels.end());
    for (size_t i = 0; i < clf.classes.size(); ++i)
        clf.label_to_index[clf.classes[i]] = static_cast<int64_t>(i);
    clf.vocab_size = embeddings ? embeddings->size(0) : max_id + 1;

    for (const auto& s : val)
        if (!train_labels.count(s.label)) {
            std::fprintf(stderr,
                         "train_classifier: val label %d unseen in train; it will score as errors\n",
                         s.label);
            break;
        }

    torch::manual_seed(static_cast<int64_t>(cfg.seed));
    clf.model = RnnClassifier(cfg, clf.vocab_size, static_cast<int64_t>(clf.classes.size()),
                              embeddings);

    auto data = to_tensors(train, clf.label_to_index);
    AdamW opt(clf.model->trainable_parameters(), {.lr = cfg.lr, .weight_decay = cfg.l2});
    std::mt19937_64 order_rng(mix_seed(cfg.seed, 0xc1a55));
    const auto n = data.ids.size(0);
    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        clf.model->train();
        opt.set_lr(classifier_lr_at(epoch, cfg));
        std::shuffle(order.begin(), order.end(), order_rng);
        auto idx = torch::from_blob(order.data(), {n}, torch::kInt64).clone();
        double loss_sum = 0.0;
        int64_t correct = 0;
        for (int64_t start = 0; start < n; start += cfg.batch) {
            const auto len = std::min<int64_t>(cfg.batch, n - start);
            if (len < 2) continue;  // batch norm needs more than one row
            auto rows = idx.narrow(0, start, len);
            auto ids = data.ids.index_select(0, rows);
            auto lengths = data.lengths.index_select(0, rows);
            auto labels = data.labels.index_select(0, rows);
            opt.zero_grad();
            auto logits = clf.model->forward(ids, lengths);
            auto loss = torch::cross_entropy_loss(logits, labels);
            loss.backward();
            opt.step();
            loss_sum += loss.item<double>() * static_cast<double>(len);
            correct += (logits.argmax(1) == labels).sum().item<int64_t>();
        }
        clf.train_loss_history.push_back(loss_sum / static_cast<double>(n));
        clf.train_acc_history.push_back(static_cast<double>(correct) / static_cast<double>(n));
    }
    clf.model->eval();
    return clf;
}

std::vector<int> predict(const TrainedClassifier& clf, const std::vector<TokenSequence>& data) {
    torch::NoGradGuard no_grad;
    auto& model = const_cast<TrainedClassifier&>(clf).model;
    model->eval();
    auto tensors = to_tensors(data, clf.label_to_index);
    // Unseen vocab ids (possible when a corpus was framed with a larger
    // vocabulary) map to UNK.
    auto ids = torch::where(tensors.ids < clf.vocab_size, tensors.ids,
                            torch::full_like(tensors.ids, Vocabulary::kUnk));
    std::vector<int> out;
    out.reserve(data.size());
    for (int64_t start = 0; start < ids.size(0); start += 512) {
        const auto len = std::min<int64_t>(512, ids.size(0) - start);
        auto logits = model->forward(ids.narrow(0, start, len), tensors.lengths.narrow(0, start, len));
        auto pred = logits.argmax(1);
        auto acc = pred.accessor<int64_t, 1>();
        for (int64_t i = 0; i < len; ++i) out.push_back(clf.classes[acc[i]]);
    }
    return out;
}

EvalReport evaluate(const TrainedClassifier& clf, const std::vector<TokenSequence>& test) {
    std::vector<int> y_true;
    y_true.reserve(test.size());
    for (const auto& s : test) y_true.push_back(s.label);
    return classification_report(y_true, predict(clf, test));
}

EvalReport classification_report(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    TORCH_CHECK(y_true.size() == y_pred.size(), "classification_report: size mismatch");
    EvalReport rep;
    std::set<int> classes(y_true.begin(), y_true.end());
    classes.insert(y_pred.begin(), y_pred.end());

    int64_t correct = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        ++rep.confusion[y_true[i]][y_pred[i]];
        if (y_true[i] == y_pred[i]) ++correct;
    }
    rep.accuracy = y_true.empty() ? 0.0 : static_cast<double>(correct) / y_true.size();

    double f1_sum = 0.0;
    for (const auto cls : classes) {
        int64_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < y_true.size(); ++i) {
            const bool t = y_true[i] == cls, p = y_pred[i] == cls;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        const auto denom = 2 * tp + fp + fn;
        const double f1 = denom > 0 ? 2.0 * tp / static_cast<double>(denom) : 0.0;
        rep.per_class_f1[cls] = f1;
        f1_sum += f1;
    }
    rep.macro_f1 = classes.empty() ? 0.0 : f1_sum / static_cast<double>(classes.size());
    return rep;
}

double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    return classification_report(y_true, y_pred).macro_f1;
}

}  // namespace vqcpc
