#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vqcpc {

// ============================================================================
// Raw multichannel sensor data and the windowed views the models consume.
// ============================================================================

struct Recording {
    std::string participant_id;
    std::vector<double> timestamps;  // seconds, strictly increasing
    std::vector<double> samples;     // T x C, row-major
    std::vector<int> labels;         // per-timestep activity id, -1 = unlabeled
    int64_t channels = 3;

    int64_t length() const { return static_cast<int64_t>(timestamps.size()); }
    double at(int64_t t, int64_t c) const { return samples[t * channels + c]; }
    double& at(int64_t t, int64_t c) { return samples[t * channels + c]; }

    // Nominal sampling rate inferred from the median timestamp delta.
    double rate_hz() const;
    void validate() const;  // invariants: monotone timestamps, shape match
};

struct SensorWindow {
    std::vector<double> values;  // W x C, row-major
    int64_t width = 0;
    int64_t channels = 0;
    int label = -1;
    std::string participant_id;

    double at(int64_t t, int64_t c) const { return values[t * channels + c]; }
    double& at(int64_t t, int64_t c) { return values[t * channels + c]; }
};

struct NormStats {
    std::vector<double> mean;  // per channel
    std::vector<double> std;   // per channel, > 0
};

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

struct FoldPlan {
    std::vector<Fold> folds;
};

// ============================================================================
// Operations
// ============================================================================

// Integer decimation to target_hz; throws NonIntegerDecimation when the
// original rate is not an integer multiple of the target.
Recording resample(const Recording& rec, double target_hz);

// Fixed-length sliding windows, stride = round(length * (1 - overlap)).
// Trailing partial windows are dropped; window label is the modal
// per-timestep label with ties broken by smallest activity id.
std::vector<SensorWindow> window(const Recording& rec, int64_t length, double overlap);

// Per-channel mean/std over a train split; throws ZeroVariance on a
// constant channel.
NormStats fit_norm(const std::vector<SensorWindow>& train_windows);
std::vector<SensorWindow> apply_norm(std::vector<SensorWindow> windows, const NormStats& stats);

// Five participant-wise folds: disjoint test sets (~20% each), remaining
// participants split 80:20 into train and val. Deterministic given seed.
FoldPlan make_folds(std::vector<std::string> participants, uint64_t seed);

// ============================================================================
// Synthetic dataset (desk-scale data source)
// ============================================================================

struct SynthConfig {
    int num_participants = 10;
    int classes = 4;
    uint64_t seed = 7;
    double duration_s = 120.0;  // per participant
    double rate_hz = 50.0;
    double segment_s = 6.0;     // contiguous span per activity segment
    double noise_std = 0.05;
};

// Each class is a distinct 3-channel oscillation signature. Classes 2 and 3
// ("pos-phase"/"neg-phase") share amplitude, frequency and jitter and differ
// only in the sign of the cross-channel phase, so their magnitude signals
// are identical by construction.
std::vector<Recording> synth_dataset(const SynthConfig& cfg);

// Names of the synthetic signatures, index = class id (first `classes` used).
const std::vector<std::string>& synth_class_names();

// ============================================================================
// File I/O: per-participant CSV (timestamp,x,y,z,label) and fold-plan JSON
// ============================================================================

Recording read_recording_csv(const std::filesystem::path& file);
void write_recording_csv(const Recording& rec, const std::filesystem::path& file);

// Reads every *.csv in the directory; participant id = file stem.
std::vector<Recording> load_dataset_dir(const std::filesystem::path& dir);
void save_dataset_dir(const std::vector<Recording>& recs, const std::filesystem::path& dir);

FoldPlan read_fold_plan(const std::filesystem::path& file);
void write_fold_plan(const FoldPlan& plan, const std::filesystem::path& file);

}  // namespace vqcpc
