#include "vqcpc/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vqcpc/common.hpp"
#include "vqcpc/errors.hpp"

namespace vqcpc {

double Recording::rate_hz() const {
    if (length() < 2) return 0.0;
    std::vector<double> dts(timestamps.size() - 1);
    for (size_t i = 0; i + 1 < timestamps.size(); ++i) dts[i] = timestamps[i + 1] - timestamps[i];
    std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
    double dt = dts[dts.size() / 2];
    return dt > 0 ? 1.0 / dt : 0.0;
}

void Recording::validate() const {
    if (channels < 1) throw Error("Recording: channels must be >= 1");
    if (samples.size() != static_cast<size_t>(length() * channels))
        throw Error("Recording: sample count does not match timestamps x channels");
    if (!labels.empty() && labels.size() != timestamps.size())
        throw Error("Recording: label count does not match timestamps");
    for (size_t i = 0; i + 1 < timestamps.size(); ++i)
        if (!(timestamps[i + 1] > timestamps[i]))
            throw Error("Recording: timestamps must be strictly increasing");
}

Recording resample(const Recording& rec, double target_hz) {
    const double orig_hz = rec.rate_hz();
    if (orig_hz <= 0 || target_hz <= 0)
        throw NonIntegerDecimation("resample: cannot infer a positive sampling rate");
    const double ratio = orig_hz / target_hz;
    const auto factor = static_cast<int64_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-6)
        throw NonIntegerDecimation("resample: " + std::to_string(orig_hz) + " Hz to " +
                                   std::to_string(target_hz) + " Hz is not an integer decimation");
    if (factor == 1) return rec;

    Recording out;
    out.participant_id = rec.participant_id;
    out.channels = rec.channels;
    const int64_t n = rec.length();
    for (int64_t t = 0; t < n; t += factor) {
        out.timestamps.push_back(rec.timestamps[t]);
        for (int64_t c = 0; c < rec.channels; ++c) out.samples.push_back(rec.at(t, c));
        if (!rec.labels.empty()) out.labels.push_back(rec.labels[t]);
    }
    return out;
}

namespace {

int modal_label(const std::vector<int>& labels, int64_t start, int64_t len) {
    std::map<int, int64_t> counts;  // ordered: ties resolve to smallest id
    for (int64_t t = start; t < start + len; ++t)
        if (labels[t] >= 0) ++counts[labels[t]];
    int best = -1;
    int64_t best_count = 0;
    for (const auto& [id, count] : counts)
        if (count > best_count) { best = id; best_count = count; }
    return best;
}

}  // namespace

std::vector<SensorWindow> window(const Recording& rec, int64_t length, double overlap) {
    if (length < 1) throw Error("window: length must be >= 1");
    if (overlap < 0.0 || overlap >= 1.0) throw Error("window: overlap must be in [0, 1)");
    const auto stride = std::max<int64_t>(1, std::llround(static_cast<double>(length) * (1.0 - overlap)));

    std::vector<SensorWindow> out;
    const int64_t n = rec.length();
    for (int64_t start = 0; start + length <= n; start += stride) {
        SensorWindow w;
        w.width = length;
        w.channels = rec.channels;
        w.participant_id = rec.participant_id;
        w.values.assign(rec.samples.begin() + start * rec.channels,
                        rec.samples.begin() + (start + length) * rec.channels);
        w.label = rec.labels.empty() ? -1 : modal_label(rec.labels, start, length);
        out.push_back(std::move(w));
    }
    return out;
}

NormStats fit_norm(const std::vector<SensorWindow>& train_windows) {
    if (train_windows.empty()) throw EmptySplit("fit_norm: empty train split");
    const int64_t C = train_windows.front().channels;
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    int64_t n = 0;
    for (const auto& w : train_windows) {
        for (int64_t t = 0; t < w.width; ++t)
            for (int64_t c = 0; c < C; ++c) mean[c] += w.at(t, c);
        n += w.width;
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& w : train_windows)
        for (int64_t t = 0; t < w.width; ++t)
            for (int64_t c = 0; c < C; ++c) {
                const double d = w.at(t, c) - mean[c];
                var[c] += d * d;
            }
    NormStats stats;
    stats.mean = mean;
    stats.std.resize(C);
    for (int64_t c = 0; c < C; ++c) {
        const double v = var[c] / static_cast<double>(n);
        if (v <= 1e-24)
            throw ZeroVariance("fit_norm: channel " + std::to_string(c) + " is constant");
        stats.std[c] = std::sqrt(v);
    }
    return stats;
}

std::vector<SensorWindow> apply_norm(std::vector<SensorWindow> windows, const NormStats& stats) {
    for (auto& w : windows) {
        if (static_cast<size_t>(w.channels) != stats.mean.size())
            throw DimensionMismatch("apply_norm: channel count mismatch");
        for (int64_t t = 0; t < w.width; ++t)
            for (int64_t c = 0; c < w.channels; ++c)
                w.at(t, c) = (w.at(t, c) - stats.mean[c]) / stats.std[c];
    }
    return windows;
}

FoldPlan make_folds(std::vector<std::string> participants, uint64_t seed) {
    const auto n = static_cast<int64_t>(participants.size());
    if (n < 5)
        throw TooFewParticipants("make_folds: need >= 5 participants, got " + std::to_string(n));

    std::mt19937_64 rng(mix_seed(seed, 0));
    std::shuffle(participants.begin(), participants.end(), rng);

    // Test chunks: sizes as equal as possible, ~20% each, disjoint by
    // construction.
    std::vector<int64_t> sizes(5, n / 5);
    for (int64_t i = 0; i < n % 5; ++i) ++sizes[i];

    FoldPlan plan;
    int64_t offset = 0;
    for (int fold = 0; fold < 5; ++fold) {
        Fold f;
        f.test.assign(participants.begin() + offset, participants.begin() + offset + sizes[fold]);
        std::vector<std::string> rest;
        rest.insert(rest.end(), participants.begin(), participants.begin() + offset);
        rest.insert(rest.end(), participants.begin() + offset + sizes[fold], participants.end());
        offset += sizes[fold];

        std::mt19937_64 fold_rng(mix_seed(seed, 1 + static_cast<uint64_t>(fold)));
        std::shuffle(rest.begin(), rest.end(), fold_rng);
        auto val_count = std::llround(0.2 * static_cast<double>(rest.size()));
        val_count = std::clamp<int64_t>(val_count, 1, static_cast<int64_t>(rest.size()) - 1);
        f.val.assign(rest.begin(), rest.begin() + val_count);
        f.train.assign(rest.begin() + val_count, rest.end());
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

// ============================================================================
// Synthetic signatures
// ============================================================================

namespace {

struct ClassSignature {
    double freq_hz;
    double amp;
    double phase_y;     // y-channel phase offset relative to x
    double z_scale;     // z = z_scale * amp * sin(2wt)
    bool is_static;
    int jitter_group;   // classes sharing a group share jitter draws
};

// Classes 2 and 3 differ only in the sign of the y-phase: x^2 + y^2 is then
// a^2 regardless of sign, so the magnitude signal carries no information
// about which of the two is present.
ClassSignature signature_for(int cls) {
    switch (cls) {
        case 0: return {0.0, 0.02, 0.0, 0.0, true, 0};           // static
        case 1: return {1.2, 0.9, 0.4, 0.5, false, 1};           // slow oscillation
        case 2: return {2.0, 0.8, +std::numbers::pi / 2, 0.3, false, 2};  // pos-phase
        case 3: return {2.0, 0.8, -std::numbers::pi / 2, 0.3, false, 2};  // neg-phase
        default: {
            // Extra classes: spread base frequencies, alternate phase sign.
            const double f = 0.6 + 0.7 * static_cast<double>(cls);
            return {f, 0.6 + 0.05 * cls, (cls % 2 ? -1.0 : 1.0) * 1.1, 0.4, false, cls};
        }
    }
}

}  // namespace

const std::vector<std::string>& synth_class_names() {
    static const std::vector<std::string> names = {"static", "slow-osc", "pos-phase", "neg-phase"};
    return names;
}

std::vector<Recording> synth_dataset(const SynthConfig& cfg) {
    if (cfg.classes < 2) throw Error("synth_dataset: need >= 2 classes");
    std::vector<Recording> out;
    const auto steps = static_cast<int64_t>(std::llround(cfg.duration_s * cfg.rate_hz));
    const auto seg_steps = std::max<int64_t>(1, std::llround(cfg.segment_s * cfg.rate_hz));
    const double dt = 1.0 / cfg.rate_hz;

    for (int p = 0; p < cfg.num_participants; ++p) {
        std::mt19937_64 rng(mix_seed(cfg.seed, 100 + static_cast<uint64_t>(p)));
        std::uniform_real_distribution<double> ujit(-1.0, 1.0);
        std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);
        std::normal_distribution<double> noise(0.0, cfg.noise_std);

        // One jitter draw per jitter group so direction-only class pairs stay
        // magnitude-identical within a participant.
        std::map<int, std::pair<double, double>> jitter;  // group -> (freq mult, amp mult)
        std::map<int, double> base_phase;
        for (int cls = 0; cls < cfg.classes; ++cls) {
            const auto sig = signature_for(cls);
            if (!jitter.count(sig.jitter_group)) {
                jitter[sig.jitter_group] = {1.0 + 0.05 * ujit(rng), 1.0 + 0.1 * ujit(rng)};
                base_phase[sig.jitter_group] = uphase(rng);
            }
        }

        Recording rec;
        rec.participant_id = "p" + std::string(p < 10 ? "0" : "") + std::to_string(p);
        rec.channels = 3;
        rec.timestamps.reserve(steps);
        rec.samples.reserve(steps * 3);
        rec.labels.reserve(steps);

        for (int64_t t = 0; t < steps; ++t) {
            const int cls = static_cast<int>((t / seg_steps) % cfg.classes);
            const auto sig = signature_for(cls);
            const auto [fj, aj] = jitter[sig.jitter_group];
            const double phase0 = base_phase[sig.jitter_group];
            const double time = static_cast<double>(t) * dt;
            double x, y, z;
            if (sig.is_static) {
                x = sig.amp;
                y = -sig.amp;
                z = 0.0;
            } else {
                const double w = 2.0 * std::numbers::pi * sig.freq_hz * fj;
                const double a = sig.amp * aj;
                x = a * std::sin(w * time + phase0);
                y = a * std::sin(w * time + phase0 + sig.phase_y);
                z = sig.z_scale * a * std::sin(2.0 * w * time + phase0);
            }
            rec.timestamps.push_back(time);
            rec.samples.push_back(x + noise(rng));
            rec.samples.push_back(y + noise(rng));
            rec.samples.push_back(z + noise(rng));
            rec.labels.push_back(cls);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// ============================================================================
// CSV and JSON I/O
// ============================================================================

Recording read_recording_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingInput("cannot open " + file.string());
    Recording rec;
    rec.participant_id = file.stem().string();
    rec.channels = 3;
    std::string line;
    if (!std::getline(in, line)) throw Error("empty csv: " + file.string());
    if (line.rfind("timestamp", 0) != 0)
        throw Error("csv header must start with 'timestamp': " + file.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        rec.timestamps.push_back(std::stod(field));
        for (int c = 0; c < 3; ++c) {
            std::getline(ss, field, ',');
            rec.samples.push_back(std::stod(field));
        }
        if (std::getline(ss, field, ','))
            rec.labels.push_back(field.empty() ? -1 : std::stoi(field));
        else
            rec.labels.push_back(-1);
    }
    rec.validate();
    return rec;
}

void write_recording_csv(const Recording& rec, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "timestamp,x,y,z,label\n";
    out.precision(9);
    for (int64_t t = 0; t < rec.length(); ++t) {
        out << rec.timestamps[t];
        for (int64_t c = 0; c < rec.channels; ++c) out << ',' << rec.at(t, c);
        out << ',';
        if (!rec.labels.empty() && rec.labels[t] >= 0) out << rec.labels[t];
        out << '\n';
    }
}

std::vector<Recording> load_dataset_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir))
        throw MissingInput("dataset directory not found: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw MissingInput("no .csv recordings in " + dir.string());
    std::vector<Recording> recs;
    recs.reserve(files.size());
    for (const auto& f : files) recs.push_back(read_recording_csv(f));
    return recs;
}

void save_dataset_dir(const std::vector<Recording>& recs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& r : recs) write_recording_csv(r, dir / (r.participant_id + ".csv"));
}

FoldPlan read_fold_plan(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingInput("cannot open fold plan " + file.string());
    nlohmann::json j;
    in >> j;
    FoldPlan plan;
    for (const auto& jf : j.at("folds")) {
        Fold f;
        f.train = jf.at("train").get<std::vector<std::string>>();
        f.val = jf.at("val").get<std::vector<std::string>>();
        f.test = jf.at("test").get<std::vector<std::string>>();
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

void write_fold_plan(const FoldPlan& plan, const std::filesystem::path& file) {
    nlohmann::json j;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : plan.folds)
        j["folds"].push_back({{"train", f.train}, {"val", f.val}, {"test", f.test}});
    std::ofstream out(file);
    if (!out) throw Error("cannot write fold plan " + file.string());
    out << j.dump(2) << '\n';
}

}  // namespace vqcpc
