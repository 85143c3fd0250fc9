// Command-line pipeline: synth | ingest | pretrain | extract | sax | lm |
// classify | analyze | repro. Every subcommand writes its outputs plus a
// deterministic manifest.json into the --out directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "vqcpc/common.hpp"
#include "vqcpc/config_json.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/pipeline.hpp"
#include "vqcpc/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw vqcpc::MissingInput("cannot open config file " + path);
    json j;
    in >> j;
    return j;
}

// Layering: file defaults <- CLI flags (seed).
vqcpc::PipelineConfig layered_config(const std::string& config_path,
                                     std::optional<uint64_t> seed_flag) {
    auto cfg = vqcpc::PipelineConfig::desk_scale();
    const auto file = load_config_file(config_path);
    if (!file.empty()) from_json(file, cfg);
    if (seed_flag) cfg.reseed(*seed_flag);
    return cfg;
}

std::vector<vqcpc::SensorWindow> load_windows(const std::string& data_dir,
                                              const vqcpc::PipelineConfig& cfg, double overlap,
                                              const std::vector<std::string>* only = nullptr) {
    auto recs = vqcpc::load_dataset_dir(data_dir);
    std::vector<vqcpc::SensorWindow> out;
    for (auto& rec : recs) {
        if (only && std::find(only->begin(), only->end(), rec.participant_id) == only->end())
            continue;
        if (rec.rate_hz() > cfg.target_hz + 0.5) rec = vqcpc::resample(rec, cfg.target_hz);
        auto w = vqcpc::window(rec, cfg.window_len, overlap);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

int run_synth(const std::string& out_dir, const vqcpc::PipelineConfig& cfg) {
    auto recs = vqcpc::synth_dataset(cfg.synth);
    vqcpc::save_dataset_dir(recs, out_dir);
    std::vector<std::string> participants;
    for (const auto& r : recs) participants.push_back(r.participant_id);
    auto plan = vqcpc::make_folds(participants, cfg.seed);
    vqcpc::write_fold_plan(plan, fs::path(out_dir) / "folds.json");
    auto manifest = vqcpc::make_manifest("synth", cfg.seed, json(cfg.synth), {},
                                         {"<participant>.csv", "folds.json"});
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    std::printf("synth: wrote %zu recordings + folds.json to %s\n", recs.size(), out_dir.c_str());
    return 0;
}

int run_ingest(const std::string& data_dir, const std::string& out_dir,
               const vqcpc::PipelineConfig& cfg) {
    auto recs = vqcpc::load_dataset_dir(data_dir);
    fs::create_directories(out_dir);
    json summary;
    summary["participants"] = json::array();
    std::vector<std::string> participants;
    for (const auto& r : recs) {
        participants.push_back(r.participant_id);
        std::map<int, int64_t> label_counts;
        for (const auto l : r.labels)
            if (l >= 0) ++label_counts[l];
        summary["participants"].push_back({{"id", r.participant_id},
                                           {"samples", r.length()},
                                           {"rate_hz", r.rate_hz()},
                                           {"labels", label_counts}});
    }
    auto plan = vqcpc::make_folds(participants, cfg.seed);
    vqcpc::write_fold_plan(plan, fs::path(out_dir) / "folds.json");
    std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
    auto manifest = vqcpc::make_manifest("ingest", cfg.seed, json::object(), {data_dir},
                                         {"summary.json", "folds.json"});
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    std::printf("ingest: %zu recordings validated; summary in %s\n", recs.size(), out_dir.c_str());
    return 0;
}

int run_pretrain(const std::string& data_dir, const std::string& out_path,
                 const std::string& folds_path, const vqcpc::PipelineConfig& cfg) {
    std::optional<vqcpc::FoldPlan> plan;
    if (!folds_path.empty()) plan = vqcpc::read_fold_plan(folds_path);
    std::vector<vqcpc::SensorWindow> train, val;
    if (plan) {
        train = load_windows(data_dir, cfg, cfg.source_overlap, &plan->folds.front().train);
        val = load_windows(data_dir, cfg, cfg.source_overlap, &plan->folds.front().val);
    } else {
        // 90:10 participant split when no fold plan is given.
        auto recs = vqcpc::load_dataset_dir(data_dir);
        std::vector<std::string> ids;
        for (const auto& r : recs) ids.push_back(r.participant_id);
        const auto val_count = std::max<size_t>(1, ids.size() / 10);
        std::vector<std::string> val_ids(ids.end() - val_count, ids.end());
        std::vector<std::string> train_ids(ids.begin(), ids.end() - val_count);
        train = load_windows(data_dir, cfg, cfg.source_overlap, &train_ids);
        val = load_windows(data_dir, cfg, cfg.source_overlap, &val_ids);
    }
    const auto stats = vqcpc::fit_norm(train);
    train = vqcpc::apply_norm(std::move(train), stats);
    val = vqcpc::apply_norm(std::move(val), stats);
    std::printf("pretrain: %zu train / %zu val windows\n", train.size(), val.size());
    auto outcome = vqcpc::pretrain(train, val, cfg.model, cfg.pretrain);
    vqcpc::save_pretrain_state(out_path, outcome, cfg.model, cfg.pretrain);
    // Norm stats ride along for downstream extraction.
    json stats_json = {{"mean", stats.mean}, {"std", stats.std}};
    std::ofstream(out_path + ".norm.json") << stats_json.dump(2) << '\n';
    auto manifest = vqcpc::make_manifest(
        "pretrain", cfg.pretrain.seed, {{"model", cfg.model}, {"train", cfg.pretrain}},
        {data_dir}, {out_path});
    manifest["metrics"] = {{"best_val", outcome.best_val}, {"best_epoch", outcome.best_epoch}};
    vqcpc::write_manifest(manifest, fs::path(out_path).parent_path() / "manifest.json");
    std::printf("pretrain: best val %.4f at epoch %lld -> %s\n", outcome.best_val,
                static_cast<long long>(outcome.best_epoch), out_path.c_str());
    return 0;
}

vqcpc::NormStats read_norm_sidecar(const std::string& checkpoint_path) {
    std::ifstream in(checkpoint_path + ".norm.json");
    if (!in)
        throw vqcpc::MissingInput("missing norm sidecar " + checkpoint_path +
                                  ".norm.json (run pretrain first)");
    json j;
    in >> j;
    vqcpc::NormStats stats;
    stats.mean = j.at("mean").get<std::vector<double>>();
    stats.std = j.at("std").get<std::vector<double>>();
    return stats;
}

int run_extract(const std::string& checkpoint_path, const std::string& data_dir,
                const std::string& out_dir, const vqcpc::PipelineConfig& cfg) {
    if (!fs::exists(checkpoint_path))
        throw vqcpc::MissingInput("checkpoint not found: " + checkpoint_path);
    auto state = vqcpc::load_pretrain_state(checkpoint_path);
    const auto stats = read_norm_sidecar(checkpoint_path);
    auto windows = vqcpc::apply_norm(load_windows(data_dir, cfg, cfg.target_overlap), stats);
    auto raw = vqcpc::extract_tokens(state.model, windows);

    fs::create_directories(out_dir);
    auto usage = vqcpc::usage_stats(raw);
    vqcpc::write_usage_csv(usage, state.model_cfg.quantizer.groups, state.model_cfg.quantizer.vars,
                           fs::path(out_dir) / "usage.csv");
    auto vocab = vqcpc::build_vocab(raw);
    vqcpc::write_vocab(vocab, fs::path(out_dir) / "vocab.json");
    vqcpc::write_corpus(vqcpc::frame_corpus(raw, vocab), fs::path(out_dir) / "corpus.txt");
    auto manifest =
        vqcpc::make_manifest("extract", cfg.seed, {{"model", state.model_cfg}},
                             {checkpoint_path, data_dir}, {"corpus.txt", "vocab.json", "usage.csv"});
    manifest["metrics"] = {{"distinct_codewords", usage.distinct_codewords},
                           {"entropy_bits", usage.entropy_bits},
                           {"vocab_size", vocab.size()}};
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    std::printf("extract: %zu windows -> %d-symbol vocabulary, %lld distinct codewords\n",
                raw.size(), vocab.size(), static_cast<long long>(usage.distinct_codewords));
    return 0;
}

int run_sax(const std::string& data_dir, const std::string& out_dir, const std::string& mode,
            const std::string& folds_path, int64_t k, const vqcpc::PipelineConfig& cfg) {
    auto windows = load_windows(data_dir, cfg, cfg.target_overlap);
    // Per-window z-normalization happens inside SAX; no global stats needed.
    fs::create_directories(out_dir);
    if (mode == "sax") {
        auto raw = vqcpc::sax_corpus(windows, cfg.sax);
        auto vocab = vqcpc::build_vocab(raw);
        vqcpc::write_vocab(vocab, fs::path(out_dir) / "vocab.json");
        vqcpc::write_corpus(vqcpc::frame_corpus(raw, vocab), fs::path(out_dir) / "corpus.txt");
        std::printf("sax: %zu windows -> %s/corpus.txt (alphabet %lld)\n", windows.size(),
                    out_dir.c_str(), static_cast<long long>(cfg.sax.alphabet_size));
    } else if (mode == "sax-repeat") {
        if (folds_path.empty())
            throw vqcpc::MissingInput("sax-repeat needs --folds (k-means fits on train splits)");
        const auto plan = vqcpc::read_fold_plan(folds_path);
        for (size_t f = 0; f < plan.folds.size(); ++f) {
            std::vector<vqcpc::SensorWindow> train_w;
            for (const auto& w : windows)
                if (std::find(plan.folds[f].train.begin(), plan.folds[f].train.end(),
                              w.participant_id) != plan.folds[f].train.end())
                    train_w.push_back(w);
            auto model = vqcpc::sax_repeat_fit(train_w, cfg.sax, k, vqcpc::mix_seed(cfg.seed, f));
            auto raw = vqcpc::sax_repeat_corpus(windows, model);
            auto vocab = vqcpc::build_vocab(raw);
            const auto suffix = ".fold" + std::to_string(f);
            vqcpc::write_vocab(vocab, fs::path(out_dir) / ("vocab" + suffix + ".json"));
            vqcpc::write_corpus(vqcpc::frame_corpus(raw, vocab),
                                fs::path(out_dir) / ("corpus" + suffix + ".txt"));
        }
        std::printf("sax-repeat: per-fold corpora in %s (k=%lld)\n", out_dir.c_str(),
                    static_cast<long long>(k));
    } else {
        throw vqcpc::Error("sax: --mode must be sax or sax-repeat");
    }
    auto manifest = vqcpc::make_manifest("sax", cfg.seed, json(cfg.sax), {data_dir}, {"corpus.txt"});
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    return 0;
}

int run_lm(const std::string& tokens_dir, const std::string& out_dir,
           const vqcpc::PipelineConfig& cfg) {
    const auto corpus_file = fs::path(tokens_dir) / "corpus.txt";
    if (!fs::exists(corpus_file))
        throw vqcpc::MissingInput("missing " + corpus_file.string() + " (run extract first)");
    auto corpus = vqcpc::read_corpus(corpus_file);
    auto vocab = vqcpc::read_vocab(fs::path(tokens_dir) / "vocab.json");
    auto outcome = vqcpc::pretrain_lm(corpus, vocab, cfg.lm);
    fs::create_directories(out_dir);
    vqcpc::write_embeddings(outcome.embeddings, fs::path(out_dir) / "embeddings.bin");
    auto manifest = vqcpc::make_manifest("lm", cfg.lm.seed, json(cfg.lm), {tokens_dir},
                                         {"embeddings.bin"});
    manifest["metrics"] = {{"masked_accuracy", outcome.final_masked_accuracy},
                           {"final_loss", outcome.loss_history.back()}};
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    std::printf("lm: masked accuracy %.3f -> %s/embeddings.bin\n", outcome.final_masked_accuracy,
                out_dir.c_str());
    return 0;
}

int run_classify(const std::string& tokens_dir, const std::string& folds_path,
                 const std::string& grid_path, const std::string& out_path,
                 const std::string& embeddings_path, const vqcpc::PipelineConfig& cfg) {
    const auto plan = vqcpc::read_fold_plan(folds_path);
    auto pcfg = cfg.protocol;
    if (!grid_path.empty()) {
        const auto gj = load_config_file(grid_path);
        pcfg.grid = gj.at("grid").get<std::vector<vqcpc::GridPoint>>();
        if (gj.contains("folds_used")) pcfg.folds_used = gj.at("folds_used").get<int64_t>();
        if (gj.contains("repeats")) pcfg.repeats = gj.at("repeats").get<int64_t>();
        if (gj.contains("epochs")) pcfg.epochs = gj.at("epochs").get<int64_t>();
        if (gj.contains("rnn_type")) pcfg.rnn_type = gj.at("rnn_type").get<std::string>();
    }

    std::optional<torch::Tensor> embeddings;
    if (!embeddings_path.empty()) {
        auto table = vqcpc::read_embeddings(embeddings_path);
        auto vocab = vqcpc::read_vocab(fs::path(tokens_dir) / "vocab.json");
        if (table.vocab_hash != vocab.hash())
            throw vqcpc::VocabMismatch("embeddings were trained on a different vocabulary");
        embeddings = table.weights;
    }

    // Per-fold corpora (corpus.fold<i>.txt, e.g. SAX-REPEAT) or one corpus.txt.
    const auto single = fs::path(tokens_dir) / "corpus.txt";
    vqcpc::ProtocolReport report;
    if (fs::exists(single)) {
        auto corpus = vqcpc::read_corpus(single);
        report = vqcpc::run_protocol(vqcpc::group_by_participant(corpus), plan, pcfg, embeddings);
    } else {
        // Restrict each fold's work to its own corpus by running fold-sliced
        // plans and merging.
        vqcpc::ProtocolReport merged;
        std::vector<double> f1s;
        for (int64_t f = 0; f < pcfg.folds_used; ++f) {
            const auto file = fs::path(tokens_dir) / ("corpus.fold" + std::to_string(f) + ".txt");
            if (!fs::exists(file)) throw vqcpc::MissingInput("missing " + file.string());
            auto corpus = vqcpc::read_corpus(file);
            vqcpc::FoldPlan sub;
            sub.folds.push_back(plan.folds.at(f));
            auto sub_cfg = pcfg;
            sub_cfg.folds_used = 1;
            auto rep =
                vqcpc::run_protocol(vqcpc::group_by_participant(corpus), sub, sub_cfg, embeddings);
            merged.grid_outcomes = rep.grid_outcomes;
            merged.chosen = rep.chosen;
            for (auto run : rep.test_runs) {
                run.fold = static_cast<int>(f);
                merged.test_runs.push_back(run);
                f1s.push_back(run.test_f1);
            }
            merged.test_untouched_during_selection =
                (f == 0 ? true : merged.test_untouched_during_selection) &&
                rep.test_untouched_during_selection;
        }
        double mean = 0.0;
        for (const auto v : f1s) mean += v;
        merged.test_f1_mean = mean / static_cast<double>(f1s.size());
        double var = 0.0;
        for (const auto v : f1s) var += (v - merged.test_f1_mean) * (v - merged.test_f1_mean);
        merged.test_f1_std =
            f1s.size() > 1 ? std::sqrt(var / static_cast<double>(f1s.size() - 1)) : 0.0;
        merged.embedding_mode = embeddings ? "frozen" : "learned";
        report = merged;
    }

    vqcpc::write_report(report, out_path);
    auto manifest = vqcpc::make_manifest("classify", pcfg.seed, json(pcfg),
                                         {tokens_dir, folds_path}, {out_path});
    manifest["metrics"] = {{"test_f1_mean", report.test_f1_mean},
                           {"test_f1_std", report.test_f1_std},
                           {"chosen_lr", report.chosen.lr},
                           {"chosen_l2", report.chosen.l2}};
    vqcpc::write_manifest(manifest, fs::path(out_path).parent_path() / "manifest.json");
    std::printf("classify: test macro F1 %.4f +/- %.4f (%s embeddings) -> %s\n",
                report.test_f1_mean, report.test_f1_std, report.embedding_mode.c_str(),
                out_path.c_str());
    return 0;
}

int run_analyze(const std::string& tokens_dir, const std::string& out_dir, bool histograms,
                const vqcpc::PipelineConfig& cfg) {
    auto corpus = vqcpc::read_corpus(fs::path(tokens_dir) / "corpus.txt");
    fs::create_directories(out_dir);
    if (histograms) {
        auto h = vqcpc::class_histograms(corpus);
        vqcpc::write_histograms_csv(h, fs::path(out_dir) / "histograms.csv");
        vqcpc::write_histogram_figures(h, fs::path(out_dir) / "figures");
        std::printf("analyze: %zu classes -> histograms.csv + figures/\n", h.size());
    }
    auto manifest = vqcpc::make_manifest("analyze", cfg.seed, json::object(), {tokens_dir},
                                         {"histograms.csv", "figures/"});
    vqcpc::write_manifest(manifest, fs::path(out_dir) / "manifest.json");
    return 0;
}

int run_repro_cmd(const std::string& out_dir, const vqcpc::PipelineConfig& cfg) {
    std::printf("repro: desk-scale pipeline (seed %llu) -> %s\n",
                static_cast<unsigned long long>(cfg.seed), out_dir.c_str());
    const auto report = vqcpc::run_repro(cfg, out_dir, /*verbose=*/true);
    std::printf("\n%-28s %s\n", "stage check", "result");
    for (const auto& c : report.checks)
        std::printf("%-28s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.detail.c_str());
    std::printf("\nrepro: %s (manifest hash %llu)\n", report.all_pass() ? "ALL PASS" : "FAILED",
                static_cast<unsigned long long>(vqcpc::config_hash(report.manifest)));
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete representation learning for wearable sensor streams"};
    app.set_version_flag("--version", vqcpc::kVersionString);
    app.require_subcommand(1);

    std::string data_dir, config_path, out_path, checkpoint_path, tokens_dir, embeddings_path,
        folds_path, grid_path, sax_mode = "sax";
    std::optional<uint64_t> seed_flag;
    int64_t sax_k = 512;
    bool histograms = false;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed_flag, "master seed (re-derives per-stage seeds)");
        cmd->add_option("--threads", threads, "torch thread count (1 = deterministic)");
    };

    auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    synth->add_option("--out", out_path, "output directory")->required();
    add_common(synth);

    auto* ingest = app.add_subcommand("ingest", "validate a CSV dataset directory");
    ingest->add_option("--data", data_dir, "directory of per-participant CSVs")->required();
    ingest->add_option("--out", out_path, "output directory")->required();
    add_common(ingest);

    auto* pretrain = app.add_subcommand("pretrain", "run VQ-CPC pre-training");
    pretrain->add_option("--data", data_dir)->required();
    pretrain->add_option("--out", out_path, "checkpoint path")->required();
    pretrain->add_option("--folds", folds_path, "fold plan (fold 0 defines train/val)");
    add_common(pretrain);

    auto* extract = app.add_subcommand("extract", "extract token corpus from a checkpoint");
    extract->add_option("--checkpoint", checkpoint_path)->required();
    extract->add_option("--data", data_dir)->required();
    extract->add_option("--out", out_path, "tokens directory")->required();
    add_common(extract);

    auto* sax = app.add_subcommand("sax", "SAX / SAX-REPEAT token corpus");
    sax->add_option("--data", data_dir)->required();
    sax->add_option("--out", out_path, "tokens directory")->required();
    sax->add_option("--mode", sax_mode, "sax | sax-repeat");
    sax->add_option("--folds", folds_path, "fold plan (required for sax-repeat)");
    sax->add_option("--k", sax_k, "sax-repeat cluster count");
    add_common(sax);

    auto* lm = app.add_subcommand("lm", "masked-token LM pre-training");
    lm->add_option("--tokens", tokens_dir)->required();
    lm->add_option("--out", out_path, "output directory")->required();
    add_common(lm);

    auto* classify = app.add_subcommand("classify", "fold-wise RNN classification");
    classify->add_option("--tokens", tokens_dir)->required();
    classify->add_option("--folds", folds_path)->required();
    classify->add_option("--grid", grid_path, "grid JSON (defaults to the full 3x3 grid)");
    classify->add_option("--out", out_path, "report path")->required();
    classify->add_option("--embeddings", embeddings_path, "frozen embeddings.bin");
    add_common(classify);

    auto* analyze = app.add_subcommand("analyze", "token analytics");
    analyze->add_option("--tokens", tokens_dir)->required();
    analyze->add_option("--out", out_path, "output directory")->required();
    analyze->add_flag("--histograms", histograms, "per-class token histograms + figures");
    add_common(analyze);

    auto* repro = app.add_subcommand("repro", "full desk-scale pipeline with pass/fail table");
    repro->add_option("--out", out_path, "run directory")->required();
    add_common(repro);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = layered_config(config_path, seed_flag);
        cfg.threads = threads;
        torch::set_num_threads(threads);
        if (synth->parsed()) return run_synth(out_path, cfg);
        if (ingest->parsed()) return run_ingest(data_dir, out_path, cfg);
        if (pretrain->parsed()) return run_pretrain(data_dir, out_path, folds_path, cfg);
        if (extract->parsed()) return run_extract(checkpoint_path, data_dir, out_path, cfg);
        if (sax->parsed()) return run_sax(data_dir, out_path, sax_mode, folds_path, sax_k, cfg);
        if (lm->parsed()) return run_lm(tokens_dir, out_path, cfg);
        if (classify->parsed())
            return run_classify(tokens_dir, folds_path, grid_path, out_path, embeddings_path, cfg);
        if (analyze->parsed()) return run_analyze(tokens_dir, out_path, histograms, cfg);
        if (repro->parsed()) return run_repro_cmd(out_path, cfg);
    } catch (const vqcpc::MissingInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
