#pragma once
#include <nlohmann/json.hpp>

#include "vqcpc/classifier.hpp"
#include "vqcpc/cpc.hpp"
#include "vqcpc/datapipe.hpp"
#include "vqcpc/lm.hpp"
#include "vqcpc/pipeline.hpp"
#include "vqcpc/pretrainer.hpp"
#include "vqcpc/protocol.hpp"
#include "vqcpc/sax.hpp"

// JSON round-tripping for every config struct; field names match the config
// file schema documented in the README. from_json falls back to the default
// for absent fields so config files may be partial.

namespace vqcpc {

namespace detail {
template <typename T>
void get_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace detail

inline void to_json(nlohmann::json& j, const ConvBlockSpec& b) {
    j = {{"channels", b.channels}, {"kernel", b.kernel}, {"stride", b.stride}};
}
inline void from_json(const nlohmann::json& j, ConvBlockSpec& b) {
    j.at("channels").get_to(b.channels);
    j.at("kernel").get_to(b.kernel);
    j.at("stride").get_to(b.stride);
}

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
    j = {{"blocks", c.blocks}, {"dropout", c.dropout}, {"variant", c.variant}};
}
inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
    if (j.contains("variant") && !j.contains("blocks")) {
        c = EncoderConfig::by_name(j.at("variant").get<std::string>());
        detail::get_opt(j, "dropout", c.dropout);
        return;
    }
    detail::get_opt(j, "blocks", c.blocks);
    detail::get_opt(j, "dropout", c.dropout);
    detail::get_opt(j, "variant", c.variant);
}

inline void to_json(nlohmann::json& j, const QuantizerConfig& c) {
    j = {{"groups", c.groups},
         {"vars", c.vars},
         {"dim", c.dim},
         {"gamma", c.gamma},
         {"init_scale", c.init_scale}};
}
inline void from_json(const nlohmann::json& j, QuantizerConfig& c) {
    detail::get_opt(j, "groups", c.groups);
    detail::get_opt(j, "vars", c.vars);
    detail::get_opt(j, "dim", c.dim);
    detail::get_opt(j, "gamma", c.gamma);
    detail::get_opt(j, "init_scale", c.init_scale);
}

inline void to_json(nlohmann::json& j, const AggregatorConfig& c) {
    j = {{"num_blocks", c.num_blocks}, {"filters", c.filters}, {"dropout", c.dropout}};
}
inline void from_json(const nlohmann::json& j, AggregatorConfig& c) {
    detail::get_opt(j, "num_blocks", c.num_blocks);
    detail::get_opt(j, "filters", c.filters);
    detail::get_opt(j, "dropout", c.dropout);
}

inline void to_json(nlohmann::json& j, const CPCConfig& c) {
    j = {{"horizon", c.horizon}, {"num_negatives", c.num_negatives}};
}
inline void from_json(const nlohmann::json& j, CPCConfig& c) {
    detail::get_opt(j, "horizon", c.horizon);
    detail::get_opt(j, "num_negatives", c.num_negatives);
}

inline void to_json(nlohmann::json& j, const VqCpcConfig& c) {
    j = {{"encoder", c.encoder},
         {"quantizer", c.quantizer},
         {"aggregator", c.aggregator},
         {"cpc", c.cpc},
         {"in_channels", c.in_channels}};
}
inline void from_json(const nlohmann::json& j, VqCpcConfig& c) {
    detail::get_opt(j, "encoder", c.encoder);
    detail::get_opt(j, "quantizer", c.quantizer);
    detail::get_opt(j, "aggregator", c.aggregator);
    detail::get_opt(j, "cpc", c.cpc);
    detail::get_opt(j, "in_channels", c.in_channels);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"lr", c.lr},
         {"l2", c.l2},
         {"batch", c.batch},
         {"max_epochs", c.max_epochs},
         {"warmup_frac", c.warmup_frac},
         {"early_stop_patience", c.early_stop_patience},
         {"early_stop_min_epoch", c.early_stop_min_epoch},
         {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    detail::get_opt(j, "lr", c.lr);
    detail::get_opt(j, "l2", c.l2);
    detail::get_opt(j, "batch", c.batch);
    detail::get_opt(j, "max_epochs", c.max_epochs);
    detail::get_opt(j, "warmup_frac", c.warmup_frac);
    detail::get_opt(j, "early_stop_patience", c.early_stop_patience);
    detail::get_opt(j, "early_stop_min_epoch", c.early_stop_min_epoch);
    detail::get_opt(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
    j = {{"num_participants", c.num_participants},
         {"classes", c.classes},
         {"seed", c.seed},
         {"duration_s", c.duration_s},
         {"rate_hz", c.rate_hz},
         {"segment_s", c.segment_s},
         {"noise_std", c.noise_std}};
}
inline void from_json(const nlohmann::json& j, SynthConfig& c) {
    detail::get_opt(j, "num_participants", c.num_participants);
    detail::get_opt(j, "classes", c.classes);
    detail::get_opt(j, "seed", c.seed);
    detail::get_opt(j, "duration_s", c.duration_s);
    detail::get_opt(j, "rate_hz", c.rate_hz);
    detail::get_opt(j, "segment_s", c.segment_s);
    detail::get_opt(j, "noise_std", c.noise_std);
}

inline void to_json(nlohmann::json& j, const SaxConfig& c) {
    j = {{"alphabet_size", c.alphabet_size}, {"paa_ratio", c.paa_ratio}};
}
inline void from_json(const nlohmann::json& j, SaxConfig& c) {
    detail::get_opt(j, "alphabet_size", c.alphabet_size);
    detail::get_opt(j, "paa_ratio", c.paa_ratio);
}

inline void to_json(nlohmann::json& j, const ClassifierConfig& c) {
    j = {{"rnn_type", c.rnn_type},     {"embedding_dim", c.embedding_dim},
         {"hidden", c.hidden},         {"rnn_layers", c.rnn_layers},
         {"dropout", c.dropout},       {"mlp_hidden", c.mlp_hidden},
         {"lr", c.lr},                 {"l2", c.l2},
         {"batch", c.batch},           {"epochs", c.epochs},
         {"lr_decay", c.lr_decay},     {"lr_decay_every", c.lr_decay_every},
         {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, ClassifierConfig& c) {
    detail::get_opt(j, "rnn_type", c.rnn_type);
    detail::get_opt(j, "embedding_dim", c.embedding_dim);
    detail::get_opt(j, "hidden", c.hidden);
    detail::get_opt(j, "rnn_layers", c.rnn_layers);
    detail::get_opt(j, "dropout", c.dropout);
    detail::get_opt(j, "mlp_hidden", c.mlp_hidden);
    detail::get_opt(j, "lr", c.lr);
    detail::get_opt(j, "l2", c.l2);
    detail::get_opt(j, "batch", c.batch);
    detail::get_opt(j, "epochs", c.epochs);
    detail::get_opt(j, "lr_decay", c.lr_decay);
    detail::get_opt(j, "lr_decay_every", c.lr_decay_every);
    detail::get_opt(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const LMConfig& c) {
    j = {{"size", c.size},           {"embed_dim", c.embed_dim},
         {"ff_dim", c.ff_dim},       {"layers", c.layers},
         {"heads", c.heads},         {"dropout", c.dropout},
         {"mask_prob", c.mask_prob}, {"mask_token_frac", c.mask_token_frac},
         {"random_token_frac", c.random_token_frac},
         {"max_len", c.max_len},     {"lr", c.lr},
         {"epochs", c.epochs},       {"batch", c.batch},
         {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, LMConfig& c) {
    if (j.contains("size") && j.size() == 1) {
        c = LMConfig::by_name(j.at("size").get<std::string>());
        return;
    }
    if (j.contains("size")) c = LMConfig::by_name(j.at("size").get<std::string>());
    detail::get_opt(j, "embed_dim", c.embed_dim);
    detail::get_opt(j, "ff_dim", c.ff_dim);
    detail::get_opt(j, "layers", c.layers);
    detail::get_opt(j, "heads", c.heads);
    detail::get_opt(j, "dropout", c.dropout);
    detail::get_opt(j, "mask_prob", c.mask_prob);
    detail::get_opt(j, "mask_token_frac", c.mask_token_frac);
    detail::get_opt(j, "random_token_frac", c.random_token_frac);
    detail::get_opt(j, "max_len", c.max_len);
    detail::get_opt(j, "lr", c.lr);
    detail::get_opt(j, "epochs", c.epochs);
    detail::get_opt(j, "batch", c.batch);
    detail::get_opt(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const GridPoint& g) {
    j = {{"lr", g.lr}, {"l2", g.l2}};
}
inline void from_json(const nlohmann::json& j, GridPoint& g) {
    detail::get_opt(j, "lr", g.lr);
    detail::get_opt(j, "l2", g.l2);
}

inline void to_json(nlohmann::json& j, const ProtocolConfig& c) {
    j = {{"grid", c.grid},
         {"rnn_type", c.rnn_type},
         {"embedding_dim", c.embedding_dim},
         {"folds_used", c.folds_used},
         {"repeats", c.repeats},
         {"epochs", c.epochs},
         {"batch", c.batch},
         {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, ProtocolConfig& c) {
    detail::get_opt(j, "grid", c.grid);
    detail::get_opt(j, "rnn_type", c.rnn_type);
    detail::get_opt(j, "embedding_dim", c.embedding_dim);
    detail::get_opt(j, "folds_used", c.folds_used);
    detail::get_opt(j, "repeats", c.repeats);
    detail::get_opt(j, "epochs", c.epochs);
    detail::get_opt(j, "batch", c.batch);
    detail::get_opt(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"synth", c.synth},
         {"model", c.model},
         {"pretrain", c.pretrain},
         {"sax", c.sax},
         {"lm", c.lm},
         {"protocol", c.protocol},
         {"window_len", c.window_len},
         {"source_overlap", c.source_overlap},
         {"target_overlap", c.target_overlap},
         {"target_hz", c.target_hz},
         {"seed", c.seed},
         {"threads", c.threads}};
}
inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    detail::get_opt(j, "synth", c.synth);
    detail::get_opt(j, "model", c.model);
    detail::get_opt(j, "pretrain", c.pretrain);
    detail::get_opt(j, "sax", c.sax);
    detail::get_opt(j, "lm", c.lm);
    detail::get_opt(j, "protocol", c.protocol);
    detail::get_opt(j, "window_len", c.window_len);
    detail::get_opt(j, "source_overlap", c.source_overlap);
    detail::get_opt(j, "target_overlap", c.target_overlap);
    detail::get_opt(j, "target_hz", c.target_hz);
    detail::get_opt(j, "seed", c.seed);
    detail::get_opt(j, "threads", c.threads);
}

}  // namespace vqcpc
