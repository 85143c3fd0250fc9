#include "vqcpc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <torch/torch.h>

#include "vqcpc/common.hpp"
#include "vqcpc/config_json.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/version.hpp"

namespace vqcpc {

PipelineConfig PipelineConfig::desk_scale() {
    PipelineConfig cfg;
    cfg.synth.num_participants = 10;
    cfg.synth.classes = 4;
    cfg.synth.duration_s = 60.0;

    cfg.model.quantizer.groups = 2;
    cfg.model.quantizer.vars = 20;
    cfg.model.aggregator.num_blocks = 2;

    cfg.pretrain.max_epochs = 50;
    cfg.pretrain.batch = 128;

    cfg.lm = LMConfig::tiny();
    cfg.lm.epochs = 20;

    cfg.protocol.grid = {{5e-4, 1e-4}, {1e-3, 1e-4}};
    cfg.protocol.folds_used = 1;
    cfg.protocol.repeats = 1;
    cfg.protocol.epochs = 30;

    cfg.reseed(cfg.seed);
    return cfg;
}

void PipelineConfig::reseed(uint64_t new_seed) {
    seed = new_seed;
    synth.seed = mix_seed(new_seed, 1);
    pretrain.seed = mix_seed(new_seed, 2);
    lm.seed = mix_seed(new_seed, 3);
    protocol.seed = mix_seed(new_seed, 4);
}

bool ReproReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

uint64_t config_hash(const nlohmann::json& config) { return fnv1a(config.dump()); }

nlohmann::json make_manifest(const std::string& command, uint64_t seed,
                             const nlohmann::json& config,
                             const std::vector<std::string>& inputs,
                             const std::vector<std::string>& outputs) {
    nlohmann::json m;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = config;
    m["config_hash"] = config_hash(config);
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["versions"] = {{"artifact", kVersionString}, {"torch", TORCH_VERSION}};
    return m;
}

void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write manifest " + file.string());
    out << manifest.dump(2) << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<SensorWindow> windows_for(const std::vector<Recording>& recs,
                                      const std::vector<std::string>& participants,
                                      int64_t window_len, double overlap) {
    std::vector<SensorWindow> out;
    for (const auto& rec : recs) {
        if (std::find(participants.begin(), participants.end(), rec.participant_id) ==
            participants.end())
            continue;
        auto w = window(rec, window_len, overlap);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

void log_stage(bool verbose, const char* fmt, auto... args) {
    if (!verbose) return;
    std::printf(fmt, args...);
    std::fflush(stdout);
}

}  // namespace

ReproReport run_repro(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                      bool verbose) {
    namespace fs = std::filesystem;
    torch::set_num_threads(cfg.threads);
    fs::create_directories(out_dir);

    ReproReport report;
    const nlohmann::json cfg_json = cfg;
    auto check = [&](const std::string& name, bool pass, const std::string& detail) {
        report.checks.push_back({name, pass, detail});
        log_stage(verbose, "  [%s] %s  %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    };

    // -- synth ---------------------------------------------------------------
    log_stage(verbose, "synth: %d participants, %d classes\n", cfg.synth.num_participants,
              cfg.synth.classes);
    auto recs = synth_dataset(cfg.synth);
    save_dataset_dir(recs, out_dir / "data");
    {
        auto again = synth_dataset(cfg.synth);
        bool identical = again.size() == recs.size();
        for (size_t i = 0; identical && i < recs.size(); ++i)
            identical = again[i].samples == recs[i].samples && again[i].labels == recs[i].labels;
        check("synth-deterministic", identical, "same seed twice is bit-identical");
    }

    std::vector<std::string> participants;
    for (const auto& r : recs) participants.push_back(r.participant_id);
    auto plan = make_folds(participants, cfg.seed);
    write_fold_plan(plan, out_dir / "folds.json");
    const auto& fold0 = plan.folds.front();

    // -- pretrain --------------------------------------------------------
    const auto t_pre = Clock::now();
    auto train_windows = windows_for(recs, fold0.train, cfg.window_len, cfg.source_overlap);
    auto val_windows = windows_for(recs, fold0.val, cfg.window_len, cfg.source_overlap);
    const auto stats = fit_norm(train_windows);
    train_windows = apply_norm(std::move(train_windows), stats);
    val_windows = apply_norm(std::move(val_windows), stats);
    log_stage(verbose, "pretrain: %zu train / %zu val windows\n", train_windows.size(),
              val_windows.size());
    auto outcome = pretrain(train_windows, val_windows, cfg.model, cfg.pretrain);
    report.pretrain_seconds = seconds_since(t_pre);
    save_pretrain_state(out_dir / "pretrain.ckpt", outcome, cfg.model, cfg.pretrain);
    report.first_val_loss = outcome.history.front().val_loss;
    report.best_val_loss = outcome.best_val;
    check("pretrain-val-improved", report.best_val_loss < report.first_val_loss,
          "best val " + std::to_string(report.best_val_loss) + " < first " +
              std::to_string(report.first_val_loss));
    check("pretrain-budget", report.pretrain_seconds < 600.0,
          std::to_string(report.pretrain_seconds) + " s (limit 600)");

    // -- extract ---------------------------------------------------------
    auto source_tokens = extract_tokens(outcome.model, train_windows);
    const auto usage = usage_stats(source_tokens);
    report.distinct_codewords = usage.distinct_codewords;
    write_usage_csv(usage, cfg.model.quantizer.groups, cfg.model.quantizer.vars,
                    out_dir / "usage.csv");
    const auto vocab_budget =
        static_cast<int64_t>(std::pow(static_cast<double>(cfg.model.quantizer.vars),
                                      static_cast<double>(cfg.model.quantizer.groups)));
    check("codeword-diversity",
          usage.distinct_codewords >= 8 && usage.distinct_codewords <= vocab_budget,
          std::to_string(usage.distinct_codewords) + " distinct composite codewords (range [8, " +
              std::to_string(vocab_budget) + "])");

    auto vocab = build_vocab(source_tokens);
    write_vocab(vocab, out_dir / "vocab.json");

    std::vector<SensorWindow> eval_windows;
    for (const auto& rec : recs) {
        auto w = apply_norm(window(rec, cfg.window_len, cfg.target_overlap), stats);
        eval_windows.insert(eval_windows.end(), w.begin(), w.end());
    }
    auto vq_raw = extract_tokens(outcome.model, eval_windows);
    auto vq_corpus = frame_corpus(vq_raw, vocab);
    write_corpus(vq_corpus, out_dir / "corpus.txt");

    // -- sax -------------------------------------------------------------
    auto sax_raw = sax_corpus(eval_windows, cfg.sax);
    auto sax_vocab = build_vocab(sax_raw);
    auto sax_corpus_framed = frame_corpus(sax_raw, sax_vocab);
    write_corpus(sax_corpus_framed, out_dir / "corpus_sax.txt");

    // -- classify: VQ vs SAX ----------------------------------------------
    const auto t_cls = Clock::now();
    auto by_participant_vq = group_by_participant(vq_corpus);
    auto by_participant_sax = group_by_participant(sax_corpus_framed);
    log_stage(verbose, "classify: %zu windows, %zu grid points\n", vq_corpus.size(),
              cfg.protocol.grid.size());
    auto vq_report = run_protocol(by_participant_vq, plan, cfg.protocol);
    write_report(vq_report, out_dir / "report_vq.json");
    auto sax_report = run_protocol(by_participant_sax, plan, cfg.protocol);
    write_report(sax_report, out_dir / "report_sax.json");
    report.vq_test_f1 = vq_report.test_f1_mean;
    report.sax_test_f1 = sax_report.test_f1_mean;
    check("vq-macro-f1", report.vq_test_f1 >= 0.80,
          "VQ tokens macro F1 " + std::to_string(report.vq_test_f1) + " (need >= 0.80)");
    check("vq-beats-sax", report.vq_test_f1 - report.sax_test_f1 >= 0.10,
          "VQ " + std::to_string(report.vq_test_f1) + " vs SAX " +
              std::to_string(report.sax_test_f1) + " (need +0.10)");
    check("protocol-audit",
          vq_report.test_untouched_during_selection && sax_report.test_untouched_during_selection,
          "no test access during model selection");

    // -- lm ---------------------------------------------------------------
    const auto t_lm = Clock::now();
    auto lm_train_corpus = frame_corpus(source_tokens, vocab);
    log_stage(verbose, "lm: %zu sequences, vocab %d\n", lm_train_corpus.size(), vocab.size());
    auto lm_outcome = pretrain_lm(lm_train_corpus, vocab, cfg.lm);
    report.lm_seconds = seconds_since(t_lm);
    report.lm_masked_accuracy = lm_outcome.final_masked_accuracy;
    write_embeddings(lm_outcome.embeddings, out_dir / "embeddings.bin");
    check("lm-budget", report.lm_seconds < 120.0,
          std::to_string(report.lm_seconds) + " s (limit 120)");

    auto lm_report =
        run_protocol(by_participant_vq, plan, cfg.protocol, lm_outcome.embeddings.weights);
    write_report(lm_report, out_dir / "report_lm.json");
    report.lm_test_f1 = lm_report.test_f1_mean;
    report.classify_seconds = seconds_since(t_cls) - report.lm_seconds;
    check("lm-no-degradation", report.lm_test_f1 >= report.vq_test_f1 - 0.02,
          "frozen-embedding F1 " + std::to_string(report.lm_test_f1) + " vs learned " +
              std::to_string(report.vq_test_f1) + " - 0.02");
    check("classify-budget", report.classify_seconds < 300.0,
          std::to_string(report.classify_seconds) + " s (limit 300)");

    // -- analyze -----------------------------------------------------------
    auto hists = class_histograms(vq_corpus);
    write_histograms_csv(hists, out_dir / "histograms.csv");
    write_histogram_figures(hists, out_dir / "figures");
    bool sums_ok = !hists.empty();
    for (const auto& [cls, hist] : hists) {
        double sum = 0.0;
        for (const auto& [id, frac] : hist) sum += frac;
        sums_ok = sums_ok && std::abs(sum - 1.0) < 1e-9;
    }
    check("histogram-fractions", sums_ok, "per-class fractions sum to 1");

    // -- manifest -----------------------------------------------------------
    nlohmann::json metrics;
    metrics["vq_test_f1"] = report.vq_test_f1;
    metrics["sax_test_f1"] = report.sax_test_f1;
    metrics["lm_test_f1"] = report.lm_test_f1;
    metrics["distinct_codewords"] = report.distinct_codewords;
    metrics["best_val_loss"] = report.best_val_loss;
    metrics["lm_masked_accuracy"] = report.lm_masked_accuracy;
    auto manifest = make_manifest("repro", cfg.seed, cfg_json, {},
                                  {"data/", "folds.json", "pretrain.ckpt", "usage.csv",
                                   "vocab.json", "corpus.txt", "corpus_sax.txt", "report_vq.json",
                                   "report_sax.json", "embeddings.bin", "report_lm.json",
                                   "histograms.csv", "figures/"});
    manifest["metrics"] = metrics;
    report.manifest = manifest;
    write_manifest(manifest, out_dir / "manifest.json");
    return report;
}

}  // namespace vqcpc
