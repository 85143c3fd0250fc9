#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "vqcpc/datapipe.hpp"
#include "vqcpc/errors.hpp"

using namespace vqcpc;

namespace {

Recording make_recording(int64_t T, double rate_hz, std::vector<int> labels = {}) {
    Recording rec;
    rec.participant_id = "t";
    rec.channels = 3;
    for (int64_t t = 0; t < T; ++t) {
        rec.timestamps.push_back(static_cast<double>(t) / rate_hz);
        for (int c = 0; c < 3; ++c) rec.samples.push_back(static_cast<double>(t * 3 + c));
    }
    rec.labels = labels.empty() ? std::vector<int>(T, 0) : std::move(labels);
    return rec;
}

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace

TEST_SUITE("datapipe") {

TEST_CASE("resample keeps every factor-th sample") {
    auto rec = make_recording(200, 200.0);
    auto out = resample(rec, 50.0);
    CHECK(out.length() == 50);
    for (int64_t t = 0; t < out.length(); ++t)
        CHECK(out.at(t, 0) == rec.at(t * 4, 0));
}

TEST_CASE("resample at the target rate is the identity") {
    auto rec = make_recording(100, 50.0);
    auto out = resample(rec, 50.0);
    CHECK(out.samples == rec.samples);
    CHECK(out.timestamps == rec.timestamps);
}

TEST_CASE("resample ramp oracle: 100 Hz ramp to 50 Hz") {
    Recording rec;
    rec.participant_id = "ramp";
    rec.channels = 1;
    for (int t = 0; t < 10; ++t) {
        rec.timestamps.push_back(t / 100.0);
        rec.samples.push_back(static_cast<double>(t));
        rec.labels.push_back(t);
    }
    auto out = resample(rec, 50.0);
    CHECK(out.samples == std::vector<double>{0, 2, 4, 6, 8});
    CHECK(out.labels == std::vector<int>{0, 2, 4, 6, 8});
}

TEST_CASE("resample rejects non-integer decimation") {
    auto rec = make_recording(160, 80.0);
    CHECK_THROWS_AS(resample(rec, 50.0), NonIntegerDecimation);
}

TEST_CASE("window counts") {
    CHECK(window(make_recording(100, 50.0), 100, 0.0).size() == 1);
    CHECK(window(make_recording(99, 50.0), 100, 0.0).empty());
    auto ws = window(make_recording(300, 50.0), 100, 0.5);
    REQUIRE(ws.size() == 5);
    // starts 0, 50, 100, 150, 200: first sample of window k = value at 3*start
    for (size_t k = 0; k < ws.size(); ++k)
        CHECK(ws[k].at(0, 0) == static_cast<double>(3 * 50 * k));
}

TEST_CASE("window label is modal with smallest-id tie break") {
    std::vector<int> labels(4);
    labels = {1, 1, 0, 0};  // tie -> 0
    auto rec = make_recording(4, 50.0, labels);
    auto ws = window(rec, 4, 0.0);
    REQUIRE(ws.size() == 1);
    CHECK(ws[0].label == 0);

    rec = make_recording(3, 50.0, {2, 2, 1});
    CHECK(window(rec, 3, 0.0)[0].label == 2);

    rec = make_recording(3, 50.0, {-1, -1, -1});
    CHECK(window(rec, 3, 0.0)[0].label == -1);
}

TEST_CASE("window coverage property") {
    std::mt19937_64 rng(41);
    for (int it = 0; it < 50; ++it) {
        const int64_t T = 1 + static_cast<int64_t>(rng() % 400);
        const int64_t len = 1 + static_cast<int64_t>(rng() % 120);
        const double overlap = (rng() % 10) / 10.0;
        auto ws = window(make_recording(T, 50.0), len, overlap);
        const auto stride =
            std::max<int64_t>(1, std::llround(static_cast<double>(len) * (1.0 - overlap)));
        const auto expected = T >= len ? (T - len) / stride + 1 : 0;
        CHECK(static_cast<int64_t>(ws.size()) == expected);
        for (const auto& w : ws) CHECK(w.width == len);
    }
}

TEST_CASE("normalization fits to zero mean unit variance") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(3.0, 2.5);
    std::vector<SensorWindow> ws(8);
    for (auto& w : ws) {
        w.width = 50;
        w.channels = 3;
        w.values.resize(150);
        for (auto& v : w.values) v = dist(rng);
    }
    const auto stats = fit_norm(ws);
    auto normed = apply_norm(ws, stats);
    for (int64_t c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        int64_t n = 0;
        for (const auto& w : normed)
            for (int64_t t = 0; t < w.width; ++t) { mean += w.at(t, c); ++n; }
        mean /= n;
        for (const auto& w : normed)
            for (int64_t t = 0; t < w.width; ++t) var += (w.at(t, c) - mean) * (w.at(t, c) - mean);
        var /= n;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-4);
    }
}

TEST_CASE("normalization formula and degenerate channel") {
    NormStats stats;
    stats.mean = {1.0};
    stats.std = {2.0};
    SensorWindow w;
    w.width = 1;
    w.channels = 1;
    w.values = {5.0};
    auto out = apply_norm({w}, stats);
    CHECK(out[0].values[0] == doctest::Approx(2.0));

    std::vector<SensorWindow> constant(2);
    for (auto& cw : constant) {
        cw.width = 10;
        cw.channels = 1;
        cw.values.assign(10, 4.2);
    }
    CHECK_THROWS_AS(fit_norm(constant), ZeroVariance);
}

TEST_CASE("fold plan invariants") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("p" + std::to_string(i));
    auto plan = make_folds(ids, 3);
    REQUIRE(plan.folds.size() == 5);
    std::set<std::string> all_test;
    for (const auto& f : plan.folds) {
        CHECK(f.test.size() == 2);
        for (const auto& p : f.test) {
            CHECK(!all_test.count(p));  // no participant tests twice
            all_test.insert(p);
        }
        std::set<std::string> train(f.train.begin(), f.train.end());
        for (const auto& p : f.val) CHECK(!train.count(p));
        for (const auto& p : f.test) {
            CHECK(!train.count(p));
            CHECK(std::find(f.val.begin(), f.val.end(), p) == f.val.end());
        }
    }
    CHECK(all_test.size() == 10);

    // deterministic
    auto plan2 = make_folds(ids, 3);
    for (size_t f = 0; f < 5; ++f) {
        CHECK(plan.folds[f].train == plan2.folds[f].train);
        CHECK(plan.folds[f].test == plan2.folds[f].test);
    }
}

TEST_CASE("fold plan edge sizes") {
    std::vector<std::string> five = {"a", "b", "c", "d", "e"};
    auto plan = make_folds(five, 1);
    for (const auto& f : plan.folds) CHECK(f.test.size() == 1);

    std::vector<std::string> four = {"a", "b", "c", "d"};
    CHECK_THROWS_AS(make_folds(four, 1), TooFewParticipants);
}

TEST_CASE("fold plan invariants over random participant sets") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 20; ++it) {
        const int n = 5 + static_cast<int>(rng() % 40);
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) ids.push_back("q" + std::to_string(i));
        auto plan = make_folds(ids, rng());
        std::set<std::string> all_test;
        size_t total_test = 0;
        for (const auto& f : plan.folds) {
            total_test += f.test.size();
            all_test.insert(f.test.begin(), f.test.end());
            CHECK(!f.train.empty());
            CHECK(!f.val.empty());
            CHECK(f.train.size() + f.val.size() + f.test.size() == static_cast<size_t>(n));
        }
        CHECK(all_test.size() == total_test);
        CHECK(all_test.size() == static_cast<size_t>(n));
    }
}

TEST_CASE("synthetic dataset is deterministic and labeled at 50 Hz") {
    SynthConfig cfg;
    cfg.num_participants = 6;
    cfg.classes = 4;
    cfg.seed = 12;
    cfg.duration_s = 20.0;
    auto a = synth_dataset(cfg);
    auto b = synth_dataset(cfg);
    REQUIRE(a.size() == 6);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].samples == b[i].samples);
        CHECK(a[i].labels == b[i].labels);
        CHECK(a[i].rate_hz() == doctest::Approx(50.0));
        std::set<int> classes(a[i].labels.begin(), a[i].labels.end());
        CHECK(classes.size() == 4);
    }
}

TEST_CASE("direction-pair classes have matching magnitude distributions") {
    SynthConfig cfg;
    cfg.num_participants = 8;
    cfg.classes = 4;
    cfg.seed = 5;
    cfg.duration_s = 60.0;
    auto recs = synth_dataset(cfg);
    // per-channel |value| samples for classes 2 and 3
    for (int c = 0; c < 3; ++c) {
        std::vector<double> pos, neg;
        for (const auto& rec : recs)
            for (int64_t t = 0; t < rec.length(); ++t) {
                if (rec.labels[t] == 2) pos.push_back(std::abs(rec.at(t, c)));
                if (rec.labels[t] == 3) neg.push_back(std::abs(rec.at(t, c)));
            }
        CHECK(ks_distance(pos, neg) < 0.05);
    }
    // and the Euclidean magnitude itself
    std::vector<double> mag_pos, mag_neg;
    for (const auto& rec : recs)
        for (int64_t t = 0; t < rec.length(); ++t) {
            double m = 0.0;
            for (int c = 0; c < 3; ++c) m += rec.at(t, c) * rec.at(t, c);
            m = std::sqrt(m);
            if (rec.labels[t] == 2) mag_pos.push_back(m);
            if (rec.labels[t] == 3) mag_neg.push_back(m);
        }
    CHECK(ks_distance(mag_pos, mag_neg) < 0.05);
}

TEST_CASE("csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "vqcpc_csv_test";
    std::filesystem::create_directories(dir);
    SynthConfig cfg;
    cfg.num_participants = 2;
    cfg.duration_s = 4.0;
    auto recs = synth_dataset(cfg);
    save_dataset_dir(recs, dir);
    auto loaded = load_dataset_dir(dir);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].participant_id == recs[0].participant_id);
    CHECK(loaded[0].length() == recs[0].length());
    CHECK(loaded[0].labels == recs[0].labels);
    for (size_t i = 0; i < recs[0].samples.size(); ++i)
        CHECK(loaded[0].samples[i] == doctest::Approx(recs[0].samples[i]).epsilon(1e-7));
    std::filesystem::remove_all(dir);
}

TEST_CASE("fold plan json round trip") {
    std::vector<std::string> ids;
    for (int i = 0; i < 7; ++i) ids.push_back("p" + std::to_string(i));
    auto plan = make_folds(ids, 9);
    const auto file = std::filesystem::temp_directory_path() / "vqcpc_folds_test.json";
    write_fold_plan(plan, file);
    auto loaded = read_fold_plan(file);
    REQUIRE(loaded.folds.size() == plan.folds.size());
    for (size_t f = 0; f < plan.folds.size(); ++f) {
        CHECK(loaded.folds[f].train == plan.folds[f].train);
        CHECK(loaded.folds[f].val == plan.folds[f].val);
        CHECK(loaded.folds[f].test == plan.folds[f].test);
    }
    std::filesystem::remove(file);
}

}  // TEST_SUITE
