#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqcpc/cpc.hpp"
#include "vqcpc/datapipe.hpp"
#include "vqcpc/lm.hpp"
#include "vqcpc/pretrainer.hpp"
#include "vqcpc/protocol.hpp"
#include "vqcpc/sax.hpp"

namespace vqcpc {

// ============================================================================
// End-to-end desk-scale pipeline: synth -> folds -> pretrain -> extract ->
// sax -> lm -> classify -> analyze, with per-stage checks and deterministic
// manifests.
// ============================================================================

struct PipelineConfig {
    SynthConfig synth;
    VqCpcConfig model;
    TrainConfig pretrain;
    SaxConfig sax;
    LMConfig lm;
    ProtocolConfig protocol;
    int64_t window_len = 100;
    double source_overlap = 0.0;  // pretraining windows
    double target_overlap = 0.5;  // evaluation windows
    double target_hz = 50.0;
    uint64_t seed = 7;
    int threads = 1;

    // Desk-scale defaults sized for a laptop CPU (G=2, V=20 codebook,
    // 2-block aggregator, reduced grid).
    static PipelineConfig desk_scale();

    // Re-derives the per-stage seeds from `seed`.
    void reseed(uint64_t new_seed);
};

struct StageCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ReproReport {
    std::vector<StageCheck> checks;
    double vq_test_f1 = 0.0;
    double sax_test_f1 = 0.0;
    double lm_test_f1 = 0.0;
    int64_t distinct_codewords = 0;
    double best_val_loss = 0.0;
    double first_val_loss = 0.0;
    double lm_masked_accuracy = 0.0;
    double pretrain_seconds = 0.0;
    double classify_seconds = 0.0;
    double lm_seconds = 0.0;
    nlohmann::json manifest;  // deterministic: no wall-clock content

    bool all_pass() const;
};

// Runs the full pipeline under out_dir (artifacts per stage + manifests).
// Prints one line per stage when verbose.
ReproReport run_repro(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                      bool verbose = false);

// Deterministic manifest for a stage: command, seed, full config, config
// hash, inputs/outputs, library versions. No timestamps.
nlohmann::json make_manifest(const std::string& command, uint64_t seed,
                             const nlohmann::json& config,
                             const std::vector<std::string>& inputs,
                             const std::vector<std::string>& outputs);
void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& file);

uint64_t config_hash(const nlohmann::json& config);

}  // namespace vqcpc
