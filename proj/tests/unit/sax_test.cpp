#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "vqcpc/errors.hpp"
#include "vqcpc/sax.hpp"

using namespace vqcpc;

namespace {

SensorWindow random_window(int64_t W, int64_t C, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    SensorWindow w;
    w.width = W;
    w.channels = C;
    w.values.resize(W * C);
    for (auto& v : w.values) v = dist(rng);
    w.participant_id = "t";
    return w;
}

// Rotation about the z axis then the x axis; preserves Euclidean magnitude.
SensorWindow rotate_window(const SensorWindow& w, double theta, double phi) {
    SensorWindow out = w;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (int64_t t = 0; t < w.width; ++t) {
        const double x = w.at(t, 0), y = w.at(t, 1), z = w.at(t, 2);
        const double x1 = ct * x - st * y, y1 = st * x + ct * y, z1 = z;
        out.at(t, 0) = x1;
        out.at(t, 1) = cp * y1 - sp * z1;
        out.at(t, 2) = sp * y1 + cp * z1;
    }
    return out;
}

}  // namespace

TEST_SUITE("sax") {

TEST_CASE("inverse normal cdf matches boost quantiles to 1e-9") {
    boost::math::normal_distribution<double> normal;
    for (const double p : {1e-6, 1e-3, 0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98, 0.999, 1 - 1e-6}) {
        const double mine = inv_normal_cdf(p);
        const double ref = boost::math::quantile(normal, p);
        CHECK(std::abs(mine - ref) < 1e-9);
    }
}

TEST_CASE("alphabet-4 breakpoints") {
    const auto bps = normal_breakpoints(4);
    REQUIRE(bps.size() == 3);
    CHECK(bps[0] == doctest::Approx(-0.6744897502).epsilon(1e-8));
    CHECK(bps[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bps[2] == doctest::Approx(0.6744897502).epsilon(1e-8));
    for (size_t i = 0; i + 1 < bps.size(); ++i) CHECK(bps[i] < bps[i + 1]);
}

TEST_CASE("breakpoints give equiprobable bins") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (const int64_t alphabet : {4, 8, 16}) {
        const auto bps = normal_breakpoints(alphabet);
        std::vector<int64_t> counts(alphabet, 0);
        const int64_t n = 1000000;
        for (int64_t i = 0; i < n; ++i) ++counts[sax_bin(dist(rng), bps)];
        for (const auto c : counts)
            CHECK(std::abs(static_cast<double>(c) / n - 1.0 / alphabet) < 0.01);
    }
}

TEST_CASE("paa segment means") {
    CHECK(paa({1, 2, 3, 4}, 2) == std::vector<double>{1.5, 3.5});
    CHECK(paa({5, 5, 5, 5}, 2) == std::vector<double>{5, 5});
    CHECK(paa({1, 2, 3, 4, 5, 6}, 3) == std::vector<double>{1.5, 3.5, 5.5});
    CHECK_THROWS_AS(paa({1, 2, 3}, 2), NonDivisibleLength);
}

TEST_CASE("paa preserves the mean") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 2.0);
    for (int it = 0; it < 20; ++it) {
        const int64_t segments = 1 + static_cast<int64_t>(rng() % 10);
        const int64_t span = 1 + static_cast<int64_t>(rng() % 8);
        std::vector<double> series(segments * span);
        for (auto& v : series) v = dist(rng);
        const auto means = paa(series, segments);
        double m_series = 0.0, m_paa = 0.0;
        for (const auto v : series) m_series += v;
        for (const auto v : means) m_paa += v;
        CHECK(std::abs(m_series / series.size() - m_paa / means.size()) < 1e-12);
    }
}

TEST_CASE("bin lookup on z-scores") {
    const auto bps = normal_breakpoints(4);
    CHECK(sax_bin(-1.0, bps) == 0);
    CHECK(sax_bin(-0.1, bps) == 1);
    CHECK(sax_bin(0.1, bps) == 2);
    CHECK(sax_bin(1.0, bps) == 3);
    // boundary: v == breakpoint falls in the lower bin (b_{j-1} < v <= b_j)
    CHECK(sax_bin(0.0, bps) == 1);
}

TEST_CASE("sax token count is W / paa_ratio") {
    SaxConfig cfg;
    cfg.alphabet_size = 16;
    cfg.paa_ratio = 2;
    auto w = random_window(100, 3, 9);
    auto seq = sax_discretize(w, cfg);
    CHECK(seq.codewords.size() == 50);
    for (const auto cw : seq.codewords) CHECK(cw < 16);
}

TEST_CASE("constant magnitude emits the middle symbol") {
    SaxConfig cfg;
    cfg.alphabet_size = 4;
    cfg.paa_ratio = 1;
    SensorWindow w;
    w.width = 8;
    w.channels = 3;
    w.values.assign(24, 0.0);
    for (int64_t t = 0; t < 8; ++t) w.at(t, 0) = 1.0;  // |v| = 1 everywhere
    auto seq = sax_discretize(w, cfg);
    const auto middle = sax_bin(0.0, normal_breakpoints(4));
    for (const auto cw : seq.codewords) CHECK(static_cast<int64_t>(cw) == middle);
}

TEST_CASE("magnitude sax is rotation invariant") {
    SaxConfig cfg;
    cfg.alphabet_size = 32;
    cfg.paa_ratio = 2;
    std::mt19937_64 rng(31);
    for (int it = 0; it < 10; ++it) {
        auto w = random_window(100, 3, rng());
        const double theta = (rng() % 628) / 100.0, phi = (rng() % 628) / 100.0;
        auto rotated = rotate_window(w, theta, phi);
        CHECK(sax_discretize(w, cfg).codewords == sax_discretize(rotated, cfg).codewords);
    }
}

TEST_CASE("sax-repeat caps k at the distinct tuple count") {
    SaxConfig cfg;
    cfg.alphabet_size = 4;
    cfg.paa_ratio = 2;
    std::vector<SensorWindow> train;
    for (int i = 0; i < 6; ++i) train.push_back(random_window(20, 3, 100 + i));
    auto model = sax_repeat_fit(train, cfg, 512, 1);
    CHECK(model.k_capped);
    CHECK(model.clusters.k <= 64);  // tuple space is 4^3
}

TEST_CASE("sax-repeat assignment matches the exhaustive oracle") {
    SaxConfig cfg;
    cfg.alphabet_size = 6;
    cfg.paa_ratio = 2;
    std::vector<SensorWindow> train;
    for (int i = 0; i < 10; ++i) train.push_back(random_window(40, 3, 7 * i + 1));
    auto model = sax_repeat_fit(train, cfg, 12, 3);

    for (const auto& w : train) {
        auto seq = sax_repeat_discretize(w, model);
        auto tuples = channel_symbol_tuples(w, cfg);
        REQUIRE(seq.codewords.size() == tuples.size());
        for (size_t f = 0; f < tuples.size(); ++f) {
            // brute-force nearest centroid, lowest index on ties
            int64_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int64_t c = 0; c < model.clusters.k; ++c) {
                double d = 0.0;
                for (int64_t j = 0; j < 3; ++j) {
                    const double diff = static_cast<double>(tuples[f][j]) -
                                        model.clusters.centroids[c * 3 + j];
                    d += diff * diff;
                }
                if (d < best_d) { best_d = d; best = c; }
            }
            CHECK(static_cast<int64_t>(seq.codewords[f]) == best);
        }
    }
}

TEST_CASE("identical per-channel symbols give identical tokens") {
    SaxConfig cfg;
    cfg.alphabet_size = 8;
    cfg.paa_ratio = 2;
    auto w = random_window(40, 3, 77);
    std::vector<SensorWindow> train = {w, random_window(40, 3, 78)};
    auto model = sax_repeat_fit(train, cfg, 8, 5);
    auto w2 = w;  // same values -> same tuples -> same tokens
    CHECK(sax_repeat_discretize(w, model).codewords ==
          sax_repeat_discretize(w2, model).codewords);
}

}  // TEST_SUITE
