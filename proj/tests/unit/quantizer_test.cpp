#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_helpers.hpp"
#include "vqcpc/errors.hpp"
#include "vqcpc/quantizer.hpp"

using namespace vqcpc;
using vqcpc_test::fd_grad;
using vqcpc_test::random_positions;
using vqcpc_test::rel_err;

namespace {

Codebook make_codebook(QuantizerConfig cfg, const torch::Tensor& entries) {
    Codebook cb(cfg);
    torch::NoGradGuard no_grad;
    cb->entries().copy_(entries);
    return cb;
}

// Exhaustive nearest-neighbor search on plain doubles, first index on ties.
std::vector<int64_t> brute_force_indices(const torch::Tensor& z, const torch::Tensor& entries,
                                         int64_t group) {
    const auto F = z.size(0);
    const auto V = entries.size(1);
    const auto P = entries.size(2);
    const auto G = entries.size(0);
    const auto D = z.size(1);
    REQUIRE(D == G * P);
    auto za = z.accessor<double, 2>();
    auto ea = entries.accessor<double, 3>();
    std::vector<int64_t> out(F);
    for (int64_t f = 0; f < F; ++f) {
        int64_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int64_t v = 0; v < V; ++v) {
            double d = 0.0;
            for (int64_t p = 0; p < P; ++p) {
                const double diff = za[f][group * P + p] - ea[group][v][p];
                d += diff * diff;
            }
            if (d < best_d) { best_d = d; best = v; }
        }
        out[f] = best;
    }
    return out;
}

}  // namespace

TEST_SUITE("quantizer") {

TEST_CASE("nearest codeword by squared distance") {
    QuantizerConfig cfg;
    cfg.groups = 1;
    cfg.vars = 2;
    cfg.dim = 2;
    auto cb = make_codebook(cfg, torch::tensor({{{1.0f, 0.0f}, {3.0f, 0.0f}}}));
    auto q = cb->quantize(torch::zeros({1, 2}));
    CHECK(q.indices.item<int64_t>() == 0);
    CHECK(q.zhat[0][0].item<float>() == doctest::Approx(1.0f));
    CHECK(q.zhat[0][1].item<float>() == doctest::Approx(0.0f));
}

TEST_CASE("z on a codeword gives zero loss terms") {
    QuantizerConfig cfg;
    cfg.groups = 1;
    cfg.vars = 2;
    cfg.dim = 2;
    auto cb = make_codebook(cfg, torch::tensor({{{1.0f, 0.5f}, {3.0f, -2.0f}}}));
    auto q = cb->quantize(torch::tensor({{3.0f, -2.0f}}));
    CHECK(q.codebook_term.item<double>() == doctest::Approx(0.0));
    CHECK(q.commitment_term.item<double>() == doctest::Approx(0.0));
}

TEST_CASE("ties break to the smallest index") {
    QuantizerConfig cfg;
    cfg.groups = 1;
    cfg.vars = 3;
    cfg.dim = 2;
    // z = (1, 0) is equidistant from (0,0) and (2,0); entry 2 duplicates 1.
    auto cb = make_codebook(cfg, torch::tensor({{{0.0f, 0.0f}, {2.0f, 0.0f}, {2.0f, 0.0f}}}));
    auto q = cb->quantize(torch::tensor({{1.0f, 0.0f}}));
    CHECK(q.indices.item<int64_t>() == 0);
}

TEST_CASE("indices match the exhaustive oracle") {
    for (const int64_t G : {1L, 2L}) {
        QuantizerConfig cfg;
        cfg.groups = G;
        cfg.vars = 4;
        cfg.dim = 8;
        torch::manual_seed(100 + G);
        Codebook cb(cfg);
        cb->to(torch::kFloat64);
        auto z = torch::randn({32, 8}, torch::kFloat64);
        auto q = cb->quantize(z);
        auto entries = cb->entries().detach();
        for (int64_t g = 0; g < G; ++g) {
            const auto oracle = brute_force_indices(z, entries, g);
            auto idx = q.indices.select(-1, g);
            for (int64_t f = 0; f < 32; ++f) CHECK(idx[f].item<int64_t>() == oracle[f]);
        }
    }
}

TEST_CASE("loss terms match the hand formula") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 4;
    cfg.dim = 8;
    torch::manual_seed(17);
    Codebook cb(cfg);
    cb->to(torch::kFloat64);
    auto z = torch::randn({16, 8}, torch::kFloat64);
    auto q = cb->quantize(z);
    auto za = z.accessor<double, 2>();
    auto ha = q.zhat.accessor<double, 2>();
    double sum = 0.0;
    for (int64_t f = 0; f < 16; ++f) {
        double norm2 = 0.0;
        for (int64_t d = 0; d < 8; ++d) {
            const double diff = za[f][d] - ha[f][d];
            norm2 += diff * diff;
        }
        sum += norm2;
    }
    const double mean = sum / 16.0;
    CHECK(std::abs(q.codebook_term.item<double>() - mean) < 1e-9);
    CHECK(std::abs(q.commitment_term.item<double>() - mean) < 1e-9);
}

TEST_CASE("straight-through passes the value and copies the gradient") {
    auto z = torch::randn({4, 6}, torch::requires_grad());
    auto zhat = torch::randn({4, 6});
    auto st = straight_through(z, zhat);
    CHECK(torch::allclose(st, zhat));

    auto loss = st.sum();
    loss.backward();
    CHECK(torch::allclose(z.grad(), torch::ones_like(z)));  // identity backward

    // arbitrary downstream gradient is delivered unchanged
    z.mutable_grad() = torch::Tensor();
    auto g = torch::randn({4, 6});
    auto st2 = straight_through(z, zhat);
    st2.backward(g);
    CHECK(torch::equal(z.grad(), g));
}

TEST_CASE("codebook receives no gradient through the straight-through path") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 4;
    cfg.dim = 8;
    torch::manual_seed(3);
    Codebook cb(cfg);
    auto z = torch::randn({5, 8}, torch::requires_grad());
    auto q = cb->quantize(z);
    auto st = straight_through(z, q.zhat.detach());
    st.sum().backward();
    CHECK(!cb->entries().grad().defined());
}

TEST_CASE("vq_loss_total arithmetic") {
    QuantizedSequence q;
    q.codebook_term = torch::tensor(0.8);
    q.commitment_term = torch::tensor(0.4);
    CHECK(vq_loss_total(q, 0.25).item<double>() == doctest::Approx(0.9));
    q.codebook_term = torch::tensor(0.0);
    q.commitment_term = torch::tensor(0.0);
    CHECK(vq_loss_total(q, 0.25).item<double>() == doctest::Approx(0.0));
}

TEST_CASE("quantize is idempotent on its own output") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 8;
    cfg.dim = 8;
    torch::manual_seed(23);
    Codebook cb(cfg);
    auto z = torch::randn({12, 8});
    auto q1 = cb->quantize(z);
    auto q2 = cb->quantize(q1.zhat.detach());
    CHECK(torch::equal(q1.zhat, q2.zhat));
    CHECK(torch::equal(q1.indices, q2.indices));
    CHECK(q2.codebook_term.item<double>() == doctest::Approx(0.0));
    CHECK(q2.commitment_term.item<double>() == doctest::Approx(0.0));
}

TEST_CASE("loss terms are non-negative and indices deterministic") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 16;
    cfg.dim = 16;
    torch::manual_seed(29);
    Codebook cb(cfg);
    for (int it = 0; it < 10; ++it) {
        auto z = torch::randn({20, 16}) * (it + 1);
        auto qa = cb->quantize(z);
        auto qb = cb->quantize(z);
        CHECK(qa.codebook_term.item<double>() >= 0.0);
        CHECK(qa.commitment_term.item<double>() >= 0.0);
        CHECK(torch::equal(qa.indices, qb.indices));
    }
}

TEST_CASE("gradient of the total equals gradient of the codebook term alone") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 4;
    cfg.dim = 8;
    cfg.gamma = 0.25;
    torch::manual_seed(5);
    Codebook cb(cfg);
    cb->to(torch::kFloat64);
    auto z = torch::randn({10, 8}, torch::kFloat64);

    auto q1 = cb->quantize(z);
    cb->loss_total(q1).backward();
    auto grad_total = cb->entries().grad().clone();

    cb->entries().mutable_grad() = torch::Tensor();
    auto q2 = cb->quantize(z);
    q2.codebook_term.backward();
    CHECK(torch::allclose(grad_total, cb->entries().grad(), 1e-12, 1e-12));
}

TEST_CASE("codebook gradient matches finite differences at float64") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 4;
    cfg.dim = 8;
    torch::manual_seed(11);
    Codebook cb(cfg);
    cb->to(torch::kFloat64);
    auto z = torch::randn({10, 8}, torch::kFloat64);

    auto q = cb->quantize(z);
    cb->loss_total(q).backward();
    auto grad = cb->entries().grad().view({-1});

    auto loss_fn = [&]() {
        auto qq = cb->quantize(z);
        return vq_loss_total(qq, cfg.gamma).item<double>();
    };
    const auto positions = random_positions(cb->entries().numel(), 10, 99);
    const auto fd = fd_grad(loss_fn, cb->entries(), positions, 1e-6);
    for (size_t i = 0; i < positions.size(); ++i)
        CHECK(rel_err(fd[i], grad[positions[i]].item<double>()) < 1e-4);
}

TEST_CASE("dimension mismatch raises") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 4;
    cfg.dim = 8;
    Codebook cb(cfg);
    CHECK_THROWS_AS(cb->quantize(torch::randn({5, 6})), DimensionMismatch);
}

TEST_CASE("usage stats") {
    RawTokenSequence all_same;
    all_same.codewords = {3, 3, 3, 3};
    auto s1 = usage_stats({all_same});
    CHECK(s1.distinct_codewords == 1);
    CHECK(s1.entropy_bits == doctest::Approx(0.0));

    RawTokenSequence uniform;
    uniform.codewords = {0, 1, 2, 3, 0, 1, 2, 3};
    auto s2 = usage_stats({uniform});
    CHECK(s2.distinct_codewords == 4);
    CHECK(s2.entropy_bits == doctest::Approx(2.0));

    CHECK_THROWS_AS(usage_stats({}), EmptyCorpus);
}

TEST_CASE("composite codeword count is bounded by V^G") {
    QuantizerConfig cfg;
    cfg.groups = 2;
    cfg.vars = 5;
    cfg.dim = 8;
    torch::manual_seed(43);
    Codebook cb(cfg);
    auto z = torch::randn({400, 8});
    auto q = cb->quantize(z);
    RawTokenSequence seq;
    seq.codewords = composite_codewords(q.indices, cfg.vars);
    auto stats = usage_stats({seq});
    CHECK(stats.distinct_codewords <= 25);
}

}  // TEST_SUITE
