#include "vqcpc/protocol.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"

namespace vqcpc {

std::vector<GridPoint> ProtocolConfig::default_grid() {
    std::vector<GridPoint> grid;
    for (const double lr : {1e-3, 1e-4, 5e-4})
        for (const double l2 : {0.0, 1e-4, 1e-5}) grid.push_back({lr, l2});
    return grid;
}

int64_t AccessAudit::count(Phase phase, SplitKind split) const {
    int64_t n = 0;
    for (const auto& e : events) n += (e.phase == phase && e.split == split);
    return n;
}

SplitAccessor::SplitAccessor(const std::map<std::string, std::vector<TokenSequence>>& by_participant,
                             const FoldPlan& plan)
    : by_participant_(by_participant), plan_(plan) {}

std::vector<TokenSequence> SplitAccessor::get(int fold, SplitKind split, Phase phase) {
    audit_.events.push_back({phase, split, fold});
    const auto& f = plan_.folds.at(fold);
    const auto& ids = split == SplitKind::kTrain ? f.train
                     : split == SplitKind::kVal  ? f.val
                                                 : f.test;
    std::vector<TokenSequence> out;
    for (const auto& pid : ids) {
        auto it = by_participant_.find(pid);
        if (it == by_participant_.end())
            throw MissingInput("protocol: no token corpus for participant " + pid);
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

std::map<std::string, std::vector<TokenSequence>> group_by_participant(
    const std::vector<TokenSequence>& corpus) {
    std::map<std::string, std::vector<TokenSequence>> out;
    for (const auto& seq : corpus) out[seq.participant_id].push_back(seq);
    return out;
}

FoldReindex build_fold_reindex(const std::vector<TokenSequence>& train) {
    FoldReindex ri;
    for (int32_t r = 0; r < Vocabulary::kReserved; ++r) ri.mapping[r] = r;
    for (const auto& seq : train)
        for (const auto id : seq.ids)
            if (id >= Vocabulary::kReserved && !ri.mapping.count(id))
                ri.mapping[id] = ri.vocab_size++;
    return ri;
}

std::vector<TokenSequence> apply_reindex(std::vector<TokenSequence> seqs, const FoldReindex& ri) {
    for (auto& seq : seqs)
        for (auto& id : seq.ids) {
            auto it = ri.mapping.find(id);
            id = it == ri.mapping.end() ? Vocabulary::kUnk : it->second;
        }
    return seqs;
}

namespace {

ClassifierConfig make_classifier_cfg(const ProtocolConfig& pcfg, const GridPoint& point,
                                     uint64_t seed) {
    ClassifierConfig cfg;
    cfg.rnn_type = pcfg.rnn_type;
    cfg.embedding_dim = pcfg.embedding_dim;
    cfg.lr = point.lr;
    cfg.l2 = point.l2;
    cfg.batch = pcfg.batch;
    cfg.epochs = pcfg.epochs;
    cfg.seed = seed;
    return cfg;
}

struct FoldData {
    std::vector<TokenSequence> train, eval;
};

double run_one(const ProtocolConfig& pcfg, const GridPoint& point, uint64_t seed,
               FoldData data, const std::optional<torch::Tensor>& embeddings,
               double* accuracy_out) {
    if (!embeddings) {
        const auto ri = build_fold_reindex(data.train);
        data.train = apply_reindex(std::move(data.train), ri);
        data.eval = apply_reindex(std::move(data.eval), ri);
    }
    const auto cfg = make_classifier_cfg(pcfg, point, seed);
    auto clf = train_classifier(data.train, {}, cfg, embeddings);
    const auto rep = evaluate(clf, data.eval);
    if (accuracy_out) *accuracy_out = rep.accuracy;
    return rep.macro_f1;
}

}  // namespace

ProtocolReport run_protocol(const std::map<std::string, std::vector<TokenSequence>>& by_participant,
                            const FoldPlan& plan, const ProtocolConfig& cfg,
                            std::optional<torch::Tensor> embeddings) {
    const auto t0 = std::chrono::steady_clock::now();
    SplitAccessor accessor(by_participant, plan);
    const auto folds = std::min<int64_t>(cfg.folds_used, static_cast<int64_t>(plan.folds.size()));
    TORCH_CHECK(folds >= 1, "run_protocol: need at least one fold");
    auto grid = cfg.grid.empty() ? ProtocolConfig::default_grid() : cfg.grid;

    ProtocolReport report;
    report.embedding_mode = embeddings ? "frozen" : "learned";

    // Selection: mean validation F1 per grid point; test folds untouched.
    for (size_t g = 0; g < grid.size(); ++g) {
        GridOutcome outcome;
        outcome.point = grid[g];
        for (int fold = 0; fold < folds; ++fold) {
            FoldData data;
            data.train = accessor.get(fold, SplitKind::kTrain, Phase::kSelection);
            data.eval = accessor.get(fold, SplitKind::kVal, Phase::kSelection);
            const auto seed = mix_seed(cfg.seed, 0x9000 + g * 64 + static_cast<uint64_t>(fold));
            outcome.fold_val_f1.push_back(
                run_one(cfg, grid[g], seed, std::move(data), embeddings, nullptr));
        }
        double sum = 0.0;
        for (const auto v : outcome.fold_val_f1) sum += v;
        outcome.mean_val_f1 = sum / static_cast<double>(outcome.fold_val_f1.size());
        report.grid_outcomes.push_back(std::move(outcome));
    }

    // Strict > keeps the first grid point on ties.
    report.chosen_index = 0;
    for (size_t g = 1; g < report.grid_outcomes.size(); ++g)
        if (report.grid_outcomes[g].mean_val_f1 >
            report.grid_outcomes[report.chosen_index].mean_val_f1)
            report.chosen_index = static_cast<int>(g);
    report.chosen = report.grid_outcomes[report.chosen_index].point;

    // Final evaluation: folds x repeats randomized runs on the test splits.
    std::vector<double> f1s;
    for (int fold = 0; fold < folds; ++fold) {
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            FoldData data;
            data.train = accessor.get(fold, SplitKind::kTrain, Phase::kFinalEval);
            data.eval = accessor.get(fold, SplitKind::kTest, Phase::kFinalEval);
            const auto seed =
                mix_seed(cfg.seed, 0xf000 + static_cast<uint64_t>(fold) * 64 + rep);
            TestRun run;
            run.fold = fold;
            run.repeat = rep;
            run.test_f1 =
                run_one(cfg, report.chosen, seed, std::move(data), embeddings, &run.accuracy);
            f1s.push_back(run.test_f1);
            report.test_runs.push_back(run);
        }
    }
    double mean = 0.0;
    for (const auto v : f1s) mean += v;
    mean /= static_cast<double>(f1s.size());
    double var = 0.0;
    for (const auto v : f1s) var += (v - mean) * (v - mean);
    report.test_f1_mean = mean;
    report.test_f1_std = f1s.size() > 1 ? std::sqrt(var / static_cast<double>(f1s.size() - 1)) : 0.0;

    report.test_untouched_during_selection = accessor.audit().test_untouched_during_selection();
    report.selection_test_accesses = accessor.audit().count(Phase::kSelection, SplitKind::kTest);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

nlohmann::json report_to_json(const ProtocolReport& r) {
    nlohmann::json j;
    j["embedding_mode"] = r.embedding_mode;
    j["grid"] = nlohmann::json::array();
    for (const auto& g : r.grid_outcomes)
        j["grid"].push_back({{"lr", g.point.lr},
                             {"l2", g.point.l2},
                             {"fold_val_f1", g.fold_val_f1},
                             {"mean_val_f1", g.mean_val_f1}});
    j["chosen"] = {{"index", r.chosen_index}, {"lr", r.chosen.lr}, {"l2", r.chosen.l2}};
    j["test_runs"] = nlohmann::json::array();
    for (const auto& t : r.test_runs)
        j["test_runs"].push_back({{"fold", t.fold},
                                  {"repeat", t.repeat},
                                  {"test_f1", t.test_f1},
                                  {"accuracy", t.accuracy}});
    j["test_f1_mean"] = r.test_f1_mean;
    j["test_f1_std"] = r.test_f1_std;
    j["test_untouched_during_selection"] = r.test_untouched_during_selection;
    j["selection_test_accesses"] = r.selection_test_accesses;
    j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

void write_report(const ProtocolReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write report " + file.string());
    out << report_to_json(report).dump(2) << '\n';
}

}  // namespace vqcpc
