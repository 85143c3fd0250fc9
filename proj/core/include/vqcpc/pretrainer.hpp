#pragma once
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vqcpc/cpc.hpp"
#include "vqcpc/datapipe.hpp"
#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// VQ-CPC pre-training: AdamW (decoupled L2), linear warmup + cosine decay to
// zero, early stopping gated past a minimum epoch, best-val checkpointing.
// ============================================================================

struct TrainConfig {
    double lr = 1e-4;
    double l2 = 1e-4;
    int64_t batch = 128;
    int64_t max_epochs = 50;
    double warmup_frac = 0.08;       // fraction of total updates
    int64_t early_stop_patience = 5;
    int64_t early_stop_min_epoch = 20;
    uint64_t seed = 7;
};

// Linear ramp 0 -> lr over the warmup steps, then cosine decay to 0 at
// total_steps. Continuous at the junction.
double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg);

// Patience counting starts only after min_epoch; epochs are 1-based.
class EarlyStopper {
   public:
    EarlyStopper(int64_t patience, int64_t min_epoch)
        : patience_(patience), min_epoch_(min_epoch) {}

    // Returns true when training should stop after this epoch.
    bool update(double val_loss, int64_t epoch);

    bool improved_last() const { return improved_last_; }
    double best() const { return best_; }

   private:
    int64_t patience_;
    int64_t min_epoch_;
    double best_ = std::numeric_limits<double>::infinity();
    int64_t streak_ = 0;
    bool improved_last_ = false;
};

struct EpochStats {
    int64_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_cpc = 0.0;
    double val_vq = 0.0;
    double lr_end = 0.0;
};

struct PretrainOutcome {
    VqCpcModel model{nullptr};  // parameters restored to the best-val epoch
    std::vector<EpochStats> history;
    double best_val = 0.0;
    int64_t best_epoch = 0;
    int64_t schedule_step = 0;  // optimizer steps taken up to the best epoch
    std::vector<torch::Tensor> opt_exp_avg;     // AdamW moments at best epoch
    std::vector<torch::Tensor> opt_exp_avg_sq;
    int64_t opt_step = 0;
};

// Deterministic given cfg.seed (single-threaded). Throws EmptySplit.
PretrainOutcome pretrain(const std::vector<SensorWindow>& train_windows,
                         const std::vector<SensorWindow>& val_windows,
                         const VqCpcConfig& model_cfg, const TrainConfig& train_cfg);

// Eval-mode encode + quantize; one RawTokenSequence per window with the
// composite group-index codewords.
std::vector<RawTokenSequence> extract_tokens(VqCpcModel& model,
                                             const std::vector<SensorWindow>& windows,
                                             int64_t batch = 256);

// ============================================================================
// Checkpointing (see checkpoint.hpp for the container format).
// ============================================================================

void save_pretrain_state(const std::filesystem::path& file, const PretrainOutcome& outcome,
                         const VqCpcConfig& model_cfg, const TrainConfig& train_cfg);

struct LoadedPretrainState {
    VqCpcModel model{nullptr};
    VqCpcConfig model_cfg;
    TrainConfig train_cfg;
    double best_val = 0.0;
    int64_t best_epoch = 0;
    int64_t schedule_step = 0;
    std::vector<torch::Tensor> opt_exp_avg;
    std::vector<torch::Tensor> opt_exp_avg_sq;
    int64_t opt_step = 0;
};

LoadedPretrainState load_pretrain_state(const std::filesystem::path& file);

}  // namespace vqcpc
