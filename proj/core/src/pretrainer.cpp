#include "vqcpc/pretrainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "vqcpc/checkpoint.hpp"
#include "vqcpc/common.hpp"
#include "vqcpc/config_json.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/optim.hpp"

namespace vqcpc {

double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
    TORCH_CHECK(step >= 0 && step <= total_steps, "lr_at: step out of range");
    const auto warmup = static_cast<int64_t>(
        std::llround(cfg.warmup_frac * static_cast<double>(total_steps)));
    if (warmup > 0 && step <= warmup)
        return cfg.lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (total_steps == warmup) return cfg.lr;
    const double progress =
        static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
    return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

bool EarlyStopper::update(double val_loss, int64_t epoch) {
    improved_last_ = val_loss < best_;
    if (improved_last_) best_ = val_loss;
    if (epoch <= min_epoch_) {
        streak_ = 0;
        return false;
    }
    streak_ = improved_last_ ? 0 : streak_ + 1;
    return streak_ >= patience_;
}

namespace {

std::vector<torch::Tensor> model_params(VqCpcModel& model) {
    std::vector<torch::Tensor> out;
    for (auto& p : model->parameters()) out.push_back(p);
    return out;
}

double eval_loss(VqCpcModel& model, const torch::Tensor& data, int64_t batch,
                 const CPCConfig&, uint64_t val_seed, double* cpc_out, double* vq_out) {
    torch::NoGradGuard no_grad;
    model->eval();
    // Fixed negatives per evaluation so validation losses are comparable
    // across epochs.
    auto gen = at::detail::createCPUGenerator(val_seed);
    double total = 0.0, cpc = 0.0, vq = 0.0;
    int64_t n = 0;
    for (int64_t start = 0; start < data.size(0); start += batch) {
        const auto len = std::min<int64_t>(batch, data.size(0) - start);
        if (len < 2) break;  // negatives need at least two slots
        auto losses = model->pretrain_loss(data.narrow(0, start, len), gen);
        total += losses.total.item<double>() * static_cast<double>(len);
        cpc += losses.cpc.item<double>() * static_cast<double>(len);
        vq += losses.vq_total.item<double>() * static_cast<double>(len);
        n += len;
    }
    TORCH_CHECK(n > 0, "eval_loss: no full batches");
    if (cpc_out) *cpc_out = cpc / static_cast<double>(n);
    if (vq_out) *vq_out = vq / static_cast<double>(n);
    return total / static_cast<double>(n);
}

std::vector<torch::Tensor> clone_all(const std::vector<torch::Tensor>& ts) {
    std::vector<torch::Tensor> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(t.detach().clone());
    return out;
}

}  // namespace

PretrainOutcome pretrain(const std::vector<SensorWindow>& train_windows,
                         const std::vector<SensorWindow>& val_windows,
                         const VqCpcConfig& model_cfg, const TrainConfig& train_cfg) {
    if (train_windows.empty() || val_windows.empty())
        throw EmptySplit("pretrain: train and val splits must be non-empty");

    torch::manual_seed(static_cast<int64_t>(train_cfg.seed));
    PretrainOutcome out;
    out.model = VqCpcModel(model_cfg);

    auto train_x = windows_to_tensor(train_windows);
    auto val_x = windows_to_tensor(val_windows);

    const auto n = train_x.size(0);
    const auto steps_per_epoch = (n + train_cfg.batch - 1) / train_cfg.batch;
    const auto total_steps = train_cfg.max_epochs * steps_per_epoch;

    auto params = model_params(out.model);
    AdamW opt(params, {.lr = train_cfg.lr, .weight_decay = train_cfg.l2});
    auto neg_gen = at::detail::createCPUGenerator(mix_seed(train_cfg.seed, 0xcbc));
    std::mt19937_64 order_rng(mix_seed(train_cfg.seed, 0x0bd));
    EarlyStopper stopper(train_cfg.early_stop_patience, train_cfg.early_stop_min_epoch);
    const uint64_t val_seed = mix_seed(train_cfg.seed, 0x7a1);

    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    int64_t global_step = 0;
    std::map<std::string, torch::Tensor> best_params;
    for (int64_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
        out.model->train();
        std::shuffle(order.begin(), order.end(), order_rng);
        auto idx = torch::from_blob(order.data(), {n}, torch::kInt64).clone();
        double epoch_loss = 0.0;
        int64_t seen = 0;
        double lr = train_cfg.lr;
        for (int64_t start = 0; start < n; start += train_cfg.batch) {
            const auto len = std::min<int64_t>(train_cfg.batch, n - start);
            if (len < 2) continue;
            auto batch = train_x.index_select(0, idx.narrow(0, start, len));
            lr = lr_at(global_step + 1, total_steps, train_cfg);
            opt.set_lr(lr);
            opt.zero_grad();
            auto losses = out.model->pretrain_loss(batch, neg_gen);
            losses.total.backward();
            opt.step();
            ++global_step;
            epoch_loss += losses.total.item<double>() * static_cast<double>(len);
            seen += len;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = seen > 0 ? epoch_loss / static_cast<double>(seen) : 0.0;
        stats.lr_end = lr;
        stats.val_loss = eval_loss(out.model, val_x, train_cfg.batch, model_cfg.cpc, val_seed,
                                   &stats.val_cpc, &stats.val_vq);
        out.history.push_back(stats);

        const bool stop = stopper.update(stats.val_loss, epoch);
        if (stopper.improved_last()) {
            out.best_val = stats.val_loss;
            out.best_epoch = epoch;
            out.schedule_step = global_step;
            best_params.clear();
            for (const auto& p : out.model->named_parameters())
                best_params.emplace(p.key(), p.value().detach().clone());
            out.opt_exp_avg = clone_all(opt.exp_avg());
            out.opt_exp_avg_sq = clone_all(opt.exp_avg_sq());
            out.opt_step = opt.step_count();
        }
        if (stop) break;
    }

    // Restore the best-val snapshot.
    if (!best_params.empty()) {
        torch::NoGradGuard no_grad;
        for (auto& p : out.model->named_parameters()) p.value().copy_(best_params.at(p.key()));
    }
    out.model->eval();
    return out;
}

std::vector<RawTokenSequence> extract_tokens(VqCpcModel& model,
                                             const std::vector<SensorWindow>& windows,
                                             int64_t batch) {
    model->eval();
    std::vector<RawTokenSequence> out;
    out.reserve(windows.size());
    for (size_t start = 0; start < windows.size(); start += static_cast<size_t>(batch)) {
        const auto end = std::min(windows.size(), start + static_cast<size_t>(batch));
        std::vector<SensorWindow> chunk(windows.begin() + start, windows.begin() + end);
        auto keys = model->tokens(windows_to_tensor(chunk));
        for (size_t i = 0; i < keys.size(); ++i) {
            RawTokenSequence seq;
            seq.codewords = std::move(keys[i]);
            seq.label = chunk[i].label;
            seq.participant_id = chunk[i].participant_id;
            out.push_back(std::move(seq));
        }
    }
    return out;
}

void save_pretrain_state(const std::filesystem::path& file, const PretrainOutcome& outcome,
                         const VqCpcConfig& model_cfg, const TrainConfig& train_cfg) {
    nlohmann::json meta;
    meta["kind"] = "vqcpc-pretrain-state";
    meta["model_config"] = model_cfg;
    meta["train_config"] = train_cfg;
    meta["best_val"] = outcome.best_val;
    meta["best_epoch"] = outcome.best_epoch;
    meta["schedule_step"] = outcome.schedule_step;
    meta["opt_step"] = outcome.opt_step;

    std::vector<std::pair<std::string, torch::Tensor>> tensors;
    auto& model = const_cast<PretrainOutcome&>(outcome).model;
    for (const auto& p : model->named_parameters())
        tensors.emplace_back("model/" + p.key(), p.value());
    for (const auto& b : model->named_buffers())
        tensors.emplace_back("buffer/" + b.key(), b.value());
    for (size_t i = 0; i < outcome.opt_exp_avg.size(); ++i) {
        tensors.emplace_back("opt/exp_avg/" + std::to_string(i), outcome.opt_exp_avg[i]);
        tensors.emplace_back("opt/exp_avg_sq/" + std::to_string(i), outcome.opt_exp_avg_sq[i]);
    }
    save_checkpoint(file, meta, tensors);
}

LoadedPretrainState load_pretrain_state(const std::filesystem::path& file) {
    auto ckpt = load_checkpoint(file);
    if (ckpt.meta.value("kind", "") != "vqcpc-pretrain-state")
        throw SchemaVersion("not a pretrain checkpoint: " + file.string());

    LoadedPretrainState st;
    st.model_cfg = ckpt.meta.at("model_config").get<VqCpcConfig>();
    st.train_cfg = ckpt.meta.at("train_config").get<TrainConfig>();
    st.best_val = ckpt.meta.at("best_val").get<double>();
    st.best_epoch = ckpt.meta.at("best_epoch").get<int64_t>();
    st.schedule_step = ckpt.meta.at("schedule_step").get<int64_t>();
    st.opt_step = ckpt.meta.at("opt_step").get<int64_t>();

    st.model = VqCpcModel(st.model_cfg);
    {
        torch::NoGradGuard no_grad;
        for (auto& p : st.model->named_parameters()) p.value().copy_(ckpt.at("model/" + p.key()));
        for (auto& b : st.model->named_buffers()) b.value().copy_(ckpt.at("buffer/" + b.key()));
    }
    st.model->eval();
    for (size_t i = 0;; ++i) {
        const auto key = "opt/exp_avg/" + std::to_string(i);
        if (!ckpt.tensors.count(key)) break;
        st.opt_exp_avg.push_back(ckpt.tensors.at(key));
        st.opt_exp_avg_sq.push_back(ckpt.tensors.at("opt/exp_avg_sq/" + std::to_string(i)));
    }
    return st;
}

}  // namespace vqcpc
