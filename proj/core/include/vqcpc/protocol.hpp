#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "vqcpc/classifier.hpp"
#include "vqcpc/datapipe.hpp"
#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// Fold-wise evaluation: grid search selected on validation F1 averaged over
// folds, then test F1 over folds x randomized repeats for the chosen point.
// Every access to fold data flows through an audited accessor; test data is
// never touched during selection.
// ============================================================================

struct GridPoint {
    double lr = 5e-4;
    double l2 = 1e-4;
};

struct ProtocolConfig {
    std::vector<GridPoint> grid;        // empty -> default_grid()
    std::string rnn_type = "GRU";
    int64_t embedding_dim = 128;
    int64_t folds_used = 2;  // desk-scale default; 5 reproduces the paper
    int64_t repeats = 2;     // randomized classifier re-trainings per fold
    int64_t epochs = 50;
    int64_t batch = 256;
    uint64_t seed = 7;

    // lr {1e-3, 1e-4, 5e-4} x l2 {0, 1e-4, 1e-5}
    static std::vector<GridPoint> default_grid();
};

enum class Phase { kSelection, kFinalEval };
enum class SplitKind { kTrain, kVal, kTest };

struct AccessEvent {
    Phase phase;
    SplitKind split;
    int fold;
};

struct AccessAudit {
    std::vector<AccessEvent> events;
    int64_t count(Phase phase, SplitKind split) const;
    bool test_untouched_during_selection() const {
        return count(Phase::kSelection, SplitKind::kTest) == 0;
    }
};

// Audited gateway to per-participant token corpora.
class SplitAccessor {
   public:
    SplitAccessor(const std::map<std::string, std::vector<TokenSequence>>& by_participant,
                  const FoldPlan& plan);

    std::vector<TokenSequence> get(int fold, SplitKind split, Phase phase);
    const AccessAudit& audit() const { return audit_; }

   private:
    const std::map<std::string, std::vector<TokenSequence>>& by_participant_;
    const FoldPlan& plan_;
    AccessAudit audit_;
};

struct GridOutcome {
    GridPoint point;
    std::vector<double> fold_val_f1;
    double mean_val_f1 = 0.0;
};

struct TestRun {
    int fold = 0;
    int repeat = 0;
    double test_f1 = 0.0;
    double accuracy = 0.0;
};

struct ProtocolReport {
    std::vector<GridOutcome> grid_outcomes;
    int chosen_index = 0;
    GridPoint chosen;
    std::vector<TestRun> test_runs;
    double test_f1_mean = 0.0;
    double test_f1_std = 0.0;
    bool test_untouched_during_selection = false;
    int64_t selection_test_accesses = 0;
    double runtime_seconds = 0.0;
    std::string embedding_mode;  // "learned" | "frozen"
};

ProtocolReport run_protocol(const std::map<std::string, std::vector<TokenSequence>>& by_participant,
                            const FoldPlan& plan, const ProtocolConfig& cfg,
                            std::optional<torch::Tensor> embeddings = std::nullopt);

nlohmann::json report_to_json(const ProtocolReport& report);
void write_report(const ProtocolReport& report, const std::filesystem::path& file);

// Groups a framed corpus by participant id.
std::map<std::string, std::vector<TokenSequence>> group_by_participant(
    const std::vector<TokenSequence>& corpus);

// Re-indexes ids over those observed in `train` (first-occurrence order);
// unseen non-reserved ids map to UNK. Applied per fold when embeddings are
// learned so the vocabulary is built from the fold's train split only.
struct FoldReindex {
    std::map<int32_t, int32_t> mapping;
    int32_t vocab_size = Vocabulary::kReserved;
};
FoldReindex build_fold_reindex(const std::vector<TokenSequence>& train);
std::vector<TokenSequence> apply_reindex(std::vector<TokenSequence> seqs, const FoldReindex& ri);

}  // namespace vqcpc
